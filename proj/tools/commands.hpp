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

// Command implementations for the tfc tool. main.cpp parses flags into the
// option structs; everything here assumes the values are already validated.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfc::cli {

/// Bad input from the user (exit code 1).
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by most commands.
struct Common {
  std::string config;  // key = value file with model and training settings
  std::string model;   // checkpoint path
  std::string out;
  std::string mode;    // serial | parallel; empty = model default
  std::optional<uint64_t> seed;
  std::optional<double> lambda;
  std::optional<int64_t> k;  // top-k, 0 = dense
  std::optional<int64_t> h;  // relative-position radius
  int threads = 1;           // from TFC_THREADS
};

struct TrainArgs {
  std::string data;  // image directory; synthetic when empty
  std::string init;  // start from this checkpoint
  std::string log;   // per-step CSV
  std::string pe;
  std::optional<int64_t> steps;
  int64_t print_every = 50;
};

struct EncodeArgs {
  std::string input;
  bool unidirectional = false;
};

struct DecodeArgs {
  std::string input;
};

struct EvalArgs {
  std::vector<std::string> inputs;  // files or directories
};

struct BenchArgs {
  std::vector<int64_t> grids;  // latent grid sides; empty = defaults
  int runs = 10;
};

struct StudyArgs {
  int64_t train_images = 512;
  int64_t heldout_images = 64;
  int64_t image_size = 128;
  int64_t steps = 600;
  int64_t batch = 8;
  double lr = 1e-3;
  std::vector<uint64_t> seeds{1};
  std::vector<std::string> modes;  // ablate-pe
  bool context_only = false;       // ablate-pe: drop the hyperprior
  std::vector<int64_t> ks;         // ablate-topk
};

struct ImpactArgs {
  int64_t radius = 3;
  int64_t heldout_images = 64;
  int64_t image_size = 128;
};

struct DumpArgs {
  std::string image;
  std::vector<std::string> positions;  // "row,col"
};

int cmd_train(const Common& c, const TrainArgs& a, bool pretrain);
int cmd_encode(const Common& c, const EncodeArgs& a);
int cmd_decode(const Common& c, const DecodeArgs& a);
int cmd_eval(const Common& c, const EvalArgs& a);
int cmd_bench(const Common& c, const BenchArgs& a);
int cmd_ablate_pe(const Common& c, const StudyArgs& a);
int cmd_ablate_topk(const Common& c, const StudyArgs& a);
int cmd_ablate_context(const Common& c, const StudyArgs& a);
int cmd_position_impact(const Common& c, const ImpactArgs& a);
int cmd_dump_attention(const Common& c, const DumpArgs& a);

/// Parses TFC_THREADS (unset = 1).
int threads_from_env();

}  // namespace tfc::cli
