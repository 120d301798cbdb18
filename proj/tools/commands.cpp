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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "tfc/corpus.hpp"
#include "tfc/experiments.hpp"
#include "tfc/image.hpp"
#include "tfc/ops.hpp"
#include "tfc/pipeline.hpp"
#include "tfc/stats.hpp"
#include "tfc/trainer.hpp"
#include "tfc_version.hpp"

namespace fs = std::filesystem;

namespace tfc::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// File-level failures are the user's to fix; rethrown as UserError.
template <typename F>
auto user_io(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw UserError(what + ": " + e.what());
  }
}

KeyValues load_config(const Common& c) {
  if (c.config.empty()) return KeyValues();
  return user_io("cannot read config " + c.config, [&] { return KeyValues::load(c.config); });
}

ModelConfig model_config(const Common& c, const std::string& pe) {
  ModelConfig mc = ModelConfig::from_kv(load_config(c));
  if (c.lambda) mc.lambda = *c.lambda;
  if (c.k) mc.entropy.topk = *c.k;
  if (c.h) mc.entropy.rpe_h = *c.h;
  if (!c.mode.empty()) mc.mode = parse_codec_mode(c.mode);
  if (!pe.empty()) mc.entropy.pe = parse_pe_mode(pe);
  mc.validate();
  return mc;
}

TrainConfig train_config(const Common& c) {
  TrainConfig tc = TrainConfig::from_kv(load_config(c));
  if (c.lambda) tc.lambda = *c.lambda;
  if (c.seed) tc.seed = *c.seed;
  tc.validate();
  return tc;
}

CompressionModel load_model(const std::string& path) {
  return user_io("cannot load model " + path, [&] { return CompressionModel::load(path); });
}

CompressionModel load_model(const Common& c) {
  if (c.model.empty()) throw UserError("--model is required");
  return load_model(c.model);
}

Tensor read_image(const std::string& path) {
  return user_io("cannot read image " + path, [&] { return load_image(path); });
}

// CSV goes to --out, or stdout when no path is given.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UserError("cannot write " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  bool to_stdout() const { return !file_; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void csv_header(std::ostream& out, const std::string& command, const KeyValues& settings) {
  out << "# tfcodec " << TFC_VERSION << ' ' << command << '\n';
  for (const auto& [k, v] : settings.entries()) out << "# " << k << " = " << v << '\n';
}

KeyValues merged(const KeyValues& a, const KeyValues& b) {
  KeyValues out = a;
  for (const auto& [k, v] : b.entries()) out.set(k, v);
  return out;
}

CodecOptions codec_options(const Common& c, const CompressionModel& model, bool unidirectional) {
  CodecOptions opt = default_codec_options(model);
  if (!c.mode.empty()) opt.mode = parse_codec_mode(c.mode);
  if (unidirectional) opt.bidirectional = false;
  return opt;
}

// Runs tasks on up to `threads` workers; results keep task order.
template <typename R>
std::vector<R> run_tasks(const std::vector<std::function<R()>>& tasks, int threads) {
  std::vector<R> out(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<size_t> next{0};
  const auto worker = [&]() {
    for (size_t i = next++; i < tasks.size(); i = next++) {
      try {
        out[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

}  // namespace

int threads_from_env() {
  const char* v = std::getenv("TFC_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 256) throw UserError(std::string("TFC_THREADS must be 1..256, got '") + v + "'");
  return static_cast<int>(n);
}

// ---- train / pretrain ----------------------------------------------------

int cmd_train(const Common& c, const TrainArgs& a, bool pretrain) {
  TrainConfig tc = train_config(c);
  if (a.steps) tc.steps = *a.steps;
  tc.validate();
  const Corpus corpus = a.data.empty() ? Corpus::synthetic() : Corpus::directory(a.data);

  CompressionModel model;
  if (!a.init.empty()) {
    if (c.h || !a.pe.empty()) throw UserError("--h and --pe change the architecture and cannot be used with --init");
    const CompressionModel init = load_model(a.init);
    ModelConfig mc = init.config();
    if (c.lambda) mc.lambda = *c.lambda;
    if (c.k) mc.entropy.topk = *c.k;
    if (!c.mode.empty()) mc.mode = parse_codec_mode(c.mode);
    model = CompressionModel(mc, tc.seed);
    model.copy_params_from(init);
  } else {
    ModelConfig mc = model_config(c, a.pe);
    mc.lambda = tc.lambda;
    model = CompressionModel(mc, tc.seed);
  }
  tc.lambda = model.config().lambda;

  std::unique_ptr<std::ofstream> log;
  if (!a.log.empty()) {
    log = std::make_unique<std::ofstream>(a.log);
    if (!*log) throw UserError("cannot write " + a.log);
    csv_header(*log, pretrain ? "pretrain" : "train", merged(model.config().to_kv(), tc.to_kv()));
    *log << "step,lr,loss,rate_latents,rate_hyper,distortion,grad_norm\n";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto on_step = [&](const StepResult& r) {
    if (log) {
      *log << r.step << ',' << r.lr << ',' << r.loss.total.item() << ',' << r.loss.rate_latents << ','
           << r.loss.rate_hyper << ',' << r.loss.distortion << ',' << r.grad_norm << '\n';
    }
    if (a.print_every > 0 && (r.step % a.print_every == 0 || r.step + 1 == tc.steps)) {
      std::printf("step %lld/%lld  lr %.2e  loss %.4f  bpp %.4f  mse %.2f  (%.0f s)\n",
                  static_cast<long long>(r.step + 1), static_cast<long long>(tc.steps), r.lr, r.loss.total.item(),
                  r.loss.rate_latents + r.loss.rate_hyper, r.loss.distortion, seconds_since(t0));
      std::fflush(stdout);
    }
  };
  if (pretrain) {
    mask_pretrain(model, corpus, tc, on_step);
  } else {
    train(model, corpus, tc, false, on_step);
  }
  model.save(c.out);
  std::printf("saved %s (hash %016llx)\n", c.out.c_str(), static_cast<unsigned long long>(model.hash()));
  return 0;
}

// ---- encode / decode / eval ------------------------------------------------

int cmd_encode(const Common& c, const EncodeArgs& a) {
  const CompressionModel model = load_model(c);
  const CodecOptions opt = codec_options(c, model, a.unidirectional);
  const Tensor x = read_image(a.input);
  const auto t0 = std::chrono::steady_clock::now();
  const EncodeResult e = encode(model, x, opt);
  const double secs = seconds_since(t0);
  write_file(c.out, e.bytes);
  const Metrics m = eval_metrics(x, quantize_8bit(e.x_hat), e.bytes.size());
  std::printf("%s -> %s: %lldx%lld, %zu bytes, %.4f bpp, PSNR %.2f dB, %s, %.2f s\n", a.input.c_str(),
              c.out.c_str(), static_cast<long long>(x.dim(3)), static_cast<long long>(x.dim(2)), e.bytes.size(),
              m.bpp, m.psnr, codec_mode_name(opt.mode), secs);
  return 0;
}

int cmd_decode(const Common& c, const DecodeArgs& a) {
  const CompressionModel model = load_model(c);
  const std::vector<uint8_t> bytes = user_io("cannot read " + a.input, [&] { return read_file(a.input); });
  const auto t0 = std::chrono::steady_clock::now();
  DecodeResult d;
  try {
    d = decode(model, bytes);
  } catch (const ModelMismatch& e) {
    throw UserError(std::string("refusing to decode: ") + e.what());
  }
  const double secs = seconds_since(t0);
  save_image(c.out, d.x_hat);
  const BitstreamHeader h = parse_bitstream(bytes).header;
  std::printf("%s -> %s: %ux%u, %s, %lld entropy-model passes, entropy decoding %.3f s, total %.2f s\n",
              a.input.c_str(), c.out.c_str(), h.width, h.height, codec_mode_name(h.mode),
              static_cast<long long>(d.latents.predict_calls), d.latents.seconds, secs);
  return 0;
}

int cmd_eval(const Common& c, const EvalArgs& a) {
  std::vector<std::string> files;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      const Corpus dir = Corpus::directory(in);
      files.insert(files.end(), dir.paths().begin(), dir.paths().end());
    } else {
      files.push_back(in);
    }
  }
  const CompressionModel model = load_model(c);
  const CodecOptions opt = codec_options(c, model, false);
  Output out(c.out);
  KeyValues settings = model.config().to_kv();
  settings.set("codec_mode", codec_mode_name(opt.mode));
  csv_header(out.stream(), "eval", settings);
  out.stream() << "image,width,height,bytes,bpp,psnr\n";
  double bpp = 0.0, psnr_sum = 0.0;
  for (const auto& f : files) {
    const Tensor x = read_image(f);
    const EncodeResult e = encode(model, x, opt);
    const DecodeResult d = decode(model, e.bytes);
    const Metrics m = eval_metrics(x, quantize_8bit(d.x_hat), e.bytes.size());
    bpp += m.bpp;
    psnr_sum += m.psnr;
    out.stream() << f << ',' << x.dim(3) << ',' << x.dim(2) << ',' << e.bytes.size() << ',' << m.bpp << ','
                 << m.psnr << '\n';
  }
  const double n = static_cast<double>(files.size());
  out.stream() << "mean,,,," << bpp / n << ',' << psnr_sum / n << '\n';
  if (!out.to_stdout()) {
    std::printf("%zu images: mean %.4f bpp, mean PSNR %.2f dB -> %s\n", files.size(), bpp / n, psnr_sum / n,
                c.out.c_str());
  }
  return 0;
}

// ---- bench ---------------------------------------------------------------

int cmd_bench(const Common& c, const BenchArgs& a) {
  const CompressionModel model = load_model(c);
  const bool hyper = model.config().entropy.use_hyper;
  std::vector<int64_t> grids = a.grids;
  if (grids.empty()) grids = hyper ? std::vector<int64_t>{4, 8, 12, 16} : std::vector<int64_t>{1, 2, 4, 8, 16};
  for (int64_t g : grids) {
    if (hyper && g % 4 != 0) {
      throw UserError("grid " + std::to_string(g) + ": models with a hyperprior need grid sides divisible by 4");
    }
  }
  Output out(c.out);
  KeyValues settings = model.config().to_kv();
  settings.set("runs", static_cast<int64_t>(a.runs));
  csv_header(out.stream(), "bench", settings);
  out.stream() << "grid,tokens,serial_passes,parallel_passes,serial_over_parallel\n";
  Rng rng(c.seed.value_or(0));
  for (int64_t g : grids) {
    const Tensor x = synthetic_image(16 * g, 16 * g, rng);
    double med[2];
    int64_t calls[2];
    for (int mi = 0; mi < 2; ++mi) {
      CodecOptions opt = default_codec_options(model);
      opt.mode = mi == 0 ? CodecMode::serial : CodecMode::parallel;
      const Bitstream s = parse_bitstream(encode(model, x, opt).bytes);
      decode_latents(model, s);  // warm-up
      std::vector<double> t;
      for (int r = 0; r < a.runs; ++r) {
        const LatentDecode d = decode_latents(model, s);
        t.push_back(d.seconds);
        calls[mi] = d.predict_calls;
      }
      med[mi] = median_of(t);
    }
    out.stream() << g << ',' << g * g << ',' << calls[0] << ',' << calls[1] << ',' << med[0] / med[1] << '\n';
  }
  return 0;
}

// ---- studies -------------------------------------------------------------

namespace {

struct Study {
  CompressionModel base;
  StudySetup setup;
  LatentData data;
};

Study prepare_study(const Common& c, const StudyArgs& a) {
  Study s;
  s.base = load_model(c);
  ModelConfig mc;
  if (c.config.empty()) {
    // Toy entropy model.
    mc.entropy.d_model = 32;
    mc.entropy.heads = 4;
    mc.entropy.hyper_depth = 2;
    mc.entropy.context_depth = 4;
  } else {
    mc = ModelConfig::from_kv(load_config(c));
  }
  mc.ae_channels = s.base.config().ae_channels;
  mc.entropy.latent_channels = s.base.config().entropy.latent_channels;
  mc.entropy.hyper_channels = s.base.config().entropy.hyper_channels;
  if (c.lambda) mc.lambda = *c.lambda;
  if (c.k) mc.entropy.topk = *c.k;
  if (c.h) mc.entropy.rpe_h = *c.h;
  mc.validate();
  s.setup.model = mc;
  s.setup.train.steps = a.steps;
  s.setup.train.batch = a.batch;
  s.setup.train.base_lr = a.lr;
  s.setup.train.lambda = mc.lambda;
  s.setup.seeds = a.seeds;
  s.data = make_latent_data(s.base, a.train_images, a.heldout_images, a.image_size, c.seed.value_or(7));
  return s;
}

KeyValues study_settings(const Study& s, const StudyArgs& a) {
  KeyValues kv = merged(s.setup.model.to_kv(), s.setup.train.to_kv());
  std::string seeds;
  for (uint64_t v : a.seeds) seeds += (seeds.empty() ? "" : ";") + std::to_string(v);
  kv.set("study_seeds", seeds);
  kv.set("train_images", a.train_images);
  kv.set("heldout_images", a.heldout_images);
  kv.set("image_size", a.image_size);
  kv.set("base_hash", std::to_string(s.base.hash()));
  return kv;
}

void write_rows(const Common& c, const std::string& command, const KeyValues& settings,
                const std::vector<StudyRow>& rows) {
  Output out(c.out);
  csv_header(out.stream(), command, settings);
  out.stream() << "variant,bpp,slice2_bpp,nonfinite_runs,per_seed_bpp\n";
  for (const auto& r : rows) {
    std::string per;
    for (double v : r.per_seed) per += (per.empty() ? "" : ";") + std::to_string(v);
    out.stream() << r.variant << ',' << r.bpp << ',' << r.slice2_bpp << ',' << r.nonfinite << ',' << per << '\n';
  }
  if (!out.to_stdout()) {
    for (const auto& r : rows) std::printf("%-26s %.4f bpp\n", r.variant.c_str(), r.bpp);
  }
}

}  // namespace

int cmd_ablate_pe(const Common& c, const StudyArgs& a) {
  std::vector<PeMode> modes;
  for (const auto& m : a.modes) modes.push_back(parse_pe_mode(m));
  if (modes.empty()) modes = {PeMode::none, PeMode::absolute, PeMode::rpe_2d, PeMode::rpe_diamond};
  Study s = prepare_study(c, a);
  if (a.context_only) s.setup.model.entropy.use_hyper = false;
  std::vector<std::function<StudyRow()>> tasks;
  for (PeMode m : modes) tasks.push_back([&s, m]() { return ablate_pe(s.setup, s.data, {m}).front(); });
  KeyValues kv = study_settings(s, a);
  write_rows(c, "ablate-pe", kv, run_tasks(tasks, c.threads));
  return 0;
}

int cmd_ablate_topk(const Common& c, const StudyArgs& a) {
  std::vector<int64_t> ks = a.ks;
  if (ks.empty()) ks = {4, 16, 0};
  Study s = prepare_study(c, a);
  std::vector<std::function<StudyRow()>> tasks;
  for (int64_t k : ks) tasks.push_back([&s, k]() { return ablate_topk(s.setup, s.data, {k}).front(); });
  write_rows(c, "ablate-topk", study_settings(s, a), run_tasks(tasks, c.threads));
  return 0;
}

int cmd_ablate_context(const Common& c, const StudyArgs& a) {
  Study s = prepare_study(c, a);
  write_rows(c, "ablate-context", study_settings(s, a), ablate_context(s.setup, s.data));
  return 0;
}

// ---- position impact -------------------------------------------------------

int cmd_position_impact(const Common& c, const ImpactArgs& a) {
  const CompressionModel model = load_model(c);
  if (!model.config().entropy.use_context) throw UserError("position-impact needs a model with a context model");
  const Tensor latents =
      analysis_latents(model, synthetic_set(a.heldout_images, a.image_size, a.image_size, c.seed.value_or(7)));
  const PositionImpact pi = position_impact(model, latents, a.radius);

  Output out(c.out);
  KeyValues settings = model.config().to_kv();
  settings.set("radius", a.radius);
  settings.set("heldout_images", a.heldout_images);
  settings.set("image_size", a.image_size);
  csv_header(out.stream(), "position-impact", settings);
  out.stream() << "# spearman_rho = " << pi.vs_distance.rho << ", p = " << pi.vs_distance.p_value << '\n';
  out.stream() << "dy,dx,l1,delta_percent\n";
  for (size_t i = 0; i < pi.offsets.size(); ++i) {
    const Offset o = pi.offsets[i];
    out.stream() << o.dy << ',' << o.dx << ',' << std::abs(o.dy) + std::abs(o.dx) << ',' << pi.delta_percent[i]
                 << '\n';
  }
  if (!out.to_stdout()) {
    // Heat map of the causal half-window, the query marked with '*'.
    for (int64_t dy = -a.radius; dy <= 0; ++dy) {
      for (int64_t dx = -a.radius; dx <= a.radius; ++dx) {
        std::string cell = "      .";
        if (dy == 0 && dx == 0) cell = "      *";
        for (size_t i = 0; i < pi.offsets.size(); ++i) {
          // The hidden key sits at query + offset.
          if (pi.offsets[i].dy == dy && pi.offsets[i].dx == dx) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%7.2f", pi.delta_percent[i]);
            cell = buf;
          }
        }
        std::printf("%s", cell.c_str());
      }
      std::printf("\n");
    }
    std::printf("Spearman rho %.3f, p %.3g over %d offsets\n", pi.vs_distance.rho, pi.vs_distance.p_value,
                pi.vs_distance.n);
  }
  return 0;
}

// ---- dump-attention --------------------------------------------------------

namespace {

void write_pgm(const fs::path& path, int64_t h, int64_t w, const std::vector<double>& v) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UserError("cannot write " + path.string());
  f << "P5\n" << w << ' ' << h << "\n255\n";
  const double mx = std::max(1e-12, *std::max_element(v.begin(), v.end()));
  for (double x : v) f.put(static_cast<char>(static_cast<uint8_t>(std::lround(255.0 * x / mx))));
}

}  // namespace

int cmd_dump_attention(const Common& c, const DumpArgs& a) {
  const CompressionModel model = load_model(c);
  const auto& ec = model.config().entropy;
  if (!ec.use_context) throw UserError("dump-attention needs a model with a context model");
  const CodecOptions opt = codec_options(c, model, false);
  const Tensor x = read_image(a.image);
  const EncodeResult e = encode(model, x, opt);
  const PositionGrid grid(e.yhat.dim(2), e.yhat.dim(3));

  std::vector<int64_t> queries;
  for (const auto& s : a.positions) {
    long long r = 0, col = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%lld,%lld%c", &r, &col, &extra) != 2) {
      throw UserError("position '" + s + "': expected row,col");
    }
    if (r < 0 || col < 0 || r >= grid.height() || col >= grid.width()) {
      throw UserError("position (" + s + ") is outside the " + std::to_string(grid.height()) + "x" +
                      std::to_string(grid.width()) + " latent grid");
    }
    if (opt.mode == CodecMode::parallel && in_first_slice(r, col)) {
      throw UserError("position (" + s + ") is in the first slice, which is coded without context");
    }
    queries.push_back(grid.index(r, col));
  }

  NoGradGuard ng;
  Tensor hyper;
  if (ec.use_hyper) hyper = model.entropy().hyper_decode(e.zhat, grid.height(), grid.width());
  const Tensor tokens = image_to_tokens(e.yhat);

  const fs::path dir = c.out.empty() ? fs::path("attention_dump") : fs::path(c.out);
  fs::create_directories(dir);
  std::ofstream csv(dir / "attention.csv");
  if (!csv) throw UserError("cannot write " + (dir / "attention.csv").string());
  KeyValues settings = model.config().to_kv();
  settings.set("image", a.image);
  settings.set("codec_mode", codec_mode_name(opt.mode));
  csv_header(csv, "dump-attention", settings);
  csv.precision(10);
  csv << "layer,head,query_row,query_col,key,key_row,key_col,weight,survivor\n";

  for (int64_t q : queries) {
    const ContextPlan plan = opt.mode == CodecMode::serial ? serial_step_plan(q) : pass2_plan(grid, opt.bidirectional);
    const auto qit = std::find(plan.queries.begin(), plan.queries.end(), q);
    const int64_t qi = qit - plan.queries.begin();
    AttentionTrace trace;
    model.entropy().context_features(tokens, hyper, plan, grid, &trace);
    const int64_t nq = static_cast<int64_t>(plan.queries.size());
    const int64_t nk = 1 + static_cast<int64_t>(plan.keys.size());
    for (size_t layer = 0; layer < trace.weights.size(); ++layer) {
      const Tensor& w = trace.weights[layer];  // [H, 1, nq, nk]
      const auto& alive = trace.survivors[layer];
      for (int64_t hd = 0; hd < w.dim(0); ++hd) {
        std::vector<double> map(static_cast<size_t>(grid.tokens()), 0.0);
        double row_sum = 0.0, best = -1.0;
        int64_t best_key = -1, survivors = 0;
        for (int64_t j = 0; j < nk; ++j) {
          const int64_t off = (hd * nq + qi) * nk + j;
          const double wt = w.data()[off];
          const bool sv = alive[off] != 0;
          row_sum += wt;
          survivors += sv;
          if (wt > best) {
            best = wt;
            best_key = j;
          }
          if (j == 0) {
            csv << layer << ',' << hd << ',' << grid.row(q) << ',' << grid.col(q) << ",start,,," << wt << ','
                << sv << '\n';
          } else {
            const int64_t k = plan.keys[j - 1];
            map[k] = wt;
            csv << layer << ',' << hd << ',' << grid.row(q) << ',' << grid.col(q) << ",latent," << grid.row(k)
                << ',' << grid.col(k) << ',' << wt << ',' << sv << '\n';
          }
        }
        write_pgm(dir / ("layer" + std::to_string(layer) + "_head" + std::to_string(hd) + "_q" +
                         std::to_string(grid.row(q)) + "_" + std::to_string(grid.col(q)) + ".pgm"),
                  grid.height(), grid.width(), map);
        const std::string arg = best_key == 0 ? "start"
                                              : "(" + std::to_string(grid.row(plan.keys[best_key - 1])) + "," +
                                                    std::to_string(grid.col(plan.keys[best_key - 1])) + ")";
        std::printf("query (%lld,%lld) layer %zu head %lld: %lld survivors, row sum %.6f, argmax %s (%.3f)\n",
                    static_cast<long long>(grid.row(q)), static_cast<long long>(grid.col(q)), layer,
                    static_cast<long long>(hd), static_cast<long long>(survivors), row_sum, arg.c_str(), best);
      }
    }
  }
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

}  // namespace tfc::cli
