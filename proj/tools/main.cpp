// Copyright 2026 The tfcodec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// tfc: train, code, evaluate and study transformer-entropy image codecs.
//
// Exit codes: 0 success, 1 bad input (flags, files, streams, wrong model),
// 2 internal error.

#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "tfc/bitstream.hpp"
#include "tfc/coder.hpp"
#include "tfc/pipeline.hpp"
#include "tfc_version.hpp"

namespace {

using namespace tfc::cli;

void add_common(CLI::App* app, Common& c, bool model, bool mode, bool arch) {
  app->add_option("--config", c.config, "key = value file with model and training settings")
      ->check(CLI::ExistingFile);
  if (model) app->add_option("--model", c.model, "model checkpoint")->required()->check(CLI::ExistingFile);
  if (mode) {
    app->add_option("--mode", c.mode, "serial or parallel (default: the model's)")
        ->check(CLI::IsMember({"serial", "parallel"}));
  }
  app->add_option("--seed", c.seed, "random seed");
  if (arch) {
    app->add_option("--lambda", c.lambda, "rate-distortion trade-off")->check(CLI::PositiveNumber);
    app->add_option("--k", c.k, "top-k attention (0 = dense)")->check(CLI::NonNegativeNumber);
    app->add_option("--h", c.h, "relative-position radius")->check(CLI::PositiveNumber);
  }
}

void add_study(CLI::App* app, StudyArgs& a) {
  app->add_option("--train-images", a.train_images, "synthetic training images")->check(CLI::PositiveNumber);
  app->add_option("--heldout-images", a.heldout_images, "synthetic held-out images")->check(CLI::PositiveNumber);
  app->add_option("--size", a.image_size, "image side, a multiple of 64")->check([](const std::string& s) {
    const long v = std::strtol(s.c_str(), nullptr, 10);
    return v > 0 && v % 64 == 0 ? std::string() : "must be a positive multiple of 64";
  });
  app->add_option("--steps", a.steps, "training steps per variant")->check(CLI::PositiveNumber);
  app->add_option("--batch", a.batch, "batch size")->check(CLI::PositiveNumber);
  app->add_option("--lr", a.lr, "peak learning rate")->check(CLI::PositiveNumber);
  app->add_option("--seeds", a.seeds, "training seeds; results are averaged")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tfc: learned image compression with a transformer entropy model"};
  app.set_version_flag("--version", std::string("tfc ") + TFC_VERSION);
  app.require_subcommand(1);
  // -h would collide with --h (relative-position radius).
  app.set_help_flag("--help", "print help and exit");

  Common c;
  TrainArgs train_args;
  EncodeArgs enc;
  DecodeArgs dec;
  EvalArgs ev;
  BenchArgs bench;
  StudyArgs study;
  ImpactArgs impact;
  DumpArgs dump;
  std::function<int()> run;

  for (const bool pretrain : {false, true}) {
    auto* sub = app.add_subcommand(pretrain ? "pretrain" : "train",
                                   pretrain ? "train with random context masks" : "train a model end to end");
    add_common(sub, c, false, true, true);
    sub->add_option("--out", c.out, "checkpoint to write")->required();
    sub->add_option("--data", train_args.data, "directory of PNG/PPM images (default: synthetic)")
        ->check(CLI::ExistingDirectory);
    sub->add_option("--init", train_args.init, "start from this checkpoint")->check(CLI::ExistingFile);
    sub->add_option("--pe", train_args.pe, "position encoding")
        ->check(CLI::IsMember({"none", "absolute", "rpe-1d1d", "rpe-2d", "diamond"}));
    sub->add_option("--steps", train_args.steps, "training steps")->check(CLI::PositiveNumber);
    sub->add_option("--log", train_args.log, "per-step CSV");
    sub->add_option("--print-every", train_args.print_every, "progress interval (0 = quiet)")
        ->check(CLI::NonNegativeNumber);
    sub->callback([&, pretrain]() { run = [&, pretrain]() { return cmd_train(c, train_args, pretrain); }; });
  }

  auto* encode = app.add_subcommand("encode", "compress an image to a .etf stream");
  add_common(encode, c, true, true, false);
  encode->add_option("input", enc.input, "PNG or PPM image")->required()->check(CLI::ExistingFile);
  encode->add_option("--out", c.out, "stream to write")->required();
  encode->add_flag("--unidirectional", enc.unidirectional, "parallel mode: causal second pass");
  encode->callback([&]() { run = [&]() { return cmd_encode(c, enc); }; });

  auto* decode = app.add_subcommand("decode", "reconstruct an image from a .etf stream");
  add_common(decode, c, true, false, false);
  decode->add_option("input", dec.input, ".etf stream")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", c.out, "image to write (.png or .ppm)")->required();
  decode->callback([&]() { run = [&]() { return cmd_decode(c, dec); }; });

  auto* eval = app.add_subcommand("eval", "bpp and PSNR over images or directories");
  add_common(eval, c, true, true, false);
  eval->add_option("inputs", ev.inputs, "images or directories")->required()->check(CLI::ExistingPath);
  eval->add_option("--out", c.out, "CSV path (default: stdout)");
  eval->callback([&]() { run = [&]() { return cmd_eval(c, ev); }; });

  auto* bn = app.add_subcommand("bench", "serial vs parallel entropy-decoding time");
  add_common(bn, c, true, false, false);
  bn->add_option("--grids", bench.grids, "latent grid sides")->delimiter(',')->check(CLI::PositiveNumber);
  bn->add_option("--runs", bench.runs, "timed runs per grid (>= 10)")->check(CLI::Range(10, 100000));
  bn->add_option("--out", c.out, "CSV path (default: stdout)");
  bn->callback([&]() { run = [&]() { return cmd_bench(c, bench); }; });

  auto* ape = app.add_subcommand("ablate-pe", "position-encoding variants on frozen latents");
  add_common(ape, c, true, false, true);
  add_study(ape, study);
  ape->add_option("--modes", study.modes, "variants")
      ->delimiter(',')
      ->check(CLI::IsMember({"none", "absolute", "rpe-1d1d", "rpe-2d", "diamond"}));
  ape->add_flag("--context-only", study.context_only, "drop the hyperprior");
  ape->add_option("--out", c.out, "CSV path (default: stdout)");
  ape->callback([&]() { run = [&]() { return cmd_ablate_pe(c, study); }; });

  auto* atk = app.add_subcommand("ablate-topk", "top-k sweep on frozen latents");
  add_common(atk, c, true, false, true);
  add_study(atk, study);
  atk->add_option("--ks", study.ks, "k values (0 = dense)")->delimiter(',')->check(CLI::NonNegativeNumber);
  atk->add_option("--out", c.out, "CSV path (default: stdout)");
  atk->callback([&]() { run = [&]() { return cmd_ablate_topk(c, study); }; });

  auto* actx = app.add_subcommand("ablate-context", "hyperprior, context and checkerboard variants");
  add_common(actx, c, true, false, true);
  add_study(actx, study);
  actx->add_option("--out", c.out, "CSV path (default: stdout)");
  actx->callback([&]() { run = [&]() { return cmd_ablate_context(c, study); }; });

  auto* pi = app.add_subcommand("position-impact", "rate increase when one context offset is hidden");
  add_common(pi, c, true, false, false);
  pi->add_option("--radius", impact.radius, "window radius")->check(CLI::Range(1, 16));
  pi->add_option("--heldout-images", impact.heldout_images, "synthetic images")->check(CLI::PositiveNumber);
  pi->add_option("--size", impact.image_size, "image side, a multiple of 64")->check([](const std::string& s) {
    const long v = std::strtol(s.c_str(), nullptr, 10);
    return v > 0 && v % 64 == 0 ? std::string() : "must be a positive multiple of 64";
  });
  pi->add_option("--out", c.out, "CSV path (default: stdout)");
  pi->callback([&]() { run = [&]() { return cmd_position_impact(c, impact); }; });

  auto* da = app.add_subcommand("dump-attention", "context-model attention rows for chosen latent positions");
  add_common(da, c, true, true, false);
  da->add_option("image", dump.image, "PNG or PPM image")->required()->check(CLI::ExistingFile);
  da->add_option("--positions", dump.positions, "latent positions as row,col")->required();
  da->add_option("--out", c.out, "output directory (default: attention_dump)");
  da->callback([&]() { run = [&]() { return cmd_dump_attention(c, dump); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    c.threads = threads_from_env();
    return run();
  } catch (const UserError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const tfc::StreamError& e) {
    std::fprintf(stderr, "error: damaged stream: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
}
