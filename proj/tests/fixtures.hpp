// Copyright 2026 The mecpe Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mecpe/cause.hpp"
#include "mecpe/corpus.hpp"
#include "mecpe/feature_store.hpp"
#include "mecpe/fusion.hpp"
#include "mecpe/metrics.hpp"

namespace mecpe::testing {

/// The four qualitative samples: a correct pair, an abstention, a cause that
/// lies in the future, and a neutral target predicted as joy.
struct QualitativeFixture {
  Corpus corpus;
  EmotionMap predictions;
  std::map<std::string, std::string> responses;  // stub fixture
};

QualitativeFixture qualitative_samples();

/// Each conversation ends in an emotional target whose true cause sits 4-5
/// utterances back. The scripted response quotes the cause with two extra
/// words; an earlier distractor repeats the response verbatim, 6-7
/// utterances back in half of the conversations and 8-9 in the rest.
struct PlantedWindowFixture {
  Corpus corpus;
  std::map<std::string, std::string> responses;
};

PlantedWindowFixture planted_window(std::size_t conversations);

/// Stub responses equal to the text of each gold pair's cause utterance.
std::map<std::string, std::string> oracle_responses(const Corpus& corpus);

/// Gaussian features for every modality, labels cycling through all classes,
/// optional random masks.
AlignedDataset random_dataset(std::uint64_t seed, std::size_t examples,
                              const std::array<Eigen::Index, kModalityCount>& dims,
                              bool random_masks);

/// Largest relative gap between the analytic gradient and central finite
/// differences (step 1e-5) over every parameter entry, in eval mode.
double max_relative_gradient_error(const FusionModelD& model, const std::vector<AlignedExample>& batch);

/// Balanced-label corpus of `utterances` utterances in conversations of 10.
Corpus balanced_corpus(std::size_t utterances, std::uint64_t seed, const std::string& prefix);

/// Independent scorer: exhaustive search for the largest one-to-one matching
/// of identical triples per conversation, then the support-weighted F1 over
/// the six non-neutral categories computed from scratch.
double brute_force_weighted_f1(const PairSet& gold, const PairSet& predicted);

/// Up to `max_pairs` gold and predicted pairs drawn from a small vocabulary so
/// that collisions and duplicates are common.
std::pair<PairSet, PairSet> random_pair_instance(std::uint64_t seed, std::size_t max_pairs);

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

/// Runs the command-line entry point in-process.
CliResult run_cli(const std::vector<std::string>& args);

/// Relative path -> bytes for every regular file below `dir`.
std::map<std::string, std::string> snapshot(const std::string& dir);

/// Writes a stub fixture file for `responses`.
void write_stub(const std::string& path, const std::map<std::string, std::string>& responses);

/// Every subcommand, in pipeline order, over a small synthetic split written
/// below `dir` (the stub fixture is written up front). Each entry is an argv
/// tail for run_cli.
std::vector<std::vector<std::string>> quickstart_commands(const std::string& dir);

/// Writes `contents` under a fresh per-test temporary directory and returns its path.
std::string temp_dir(const std::string& name);

}  // namespace mecpe::testing
