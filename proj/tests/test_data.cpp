// Copyright 2026 The dp2 Authors.
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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"
#include "dp2/data.hpp"
#include "dp2/reference.hpp"

using namespace dp2;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dp2_data_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("load_sparse parses labels and features") {
  const std::string path = temp_path("basic.txt");
  write_file(path, "1 0:1.0 5:2.0\n0 3:-0.5\n");
  const Dataset data = load_sparse(path, 10);
  REQUIRE(data.size() == 2);
  CHECK(data.dim == 10);
  CHECK(data.examples[0].labels == std::vector<std::int32_t>{1});
  CHECK(data.examples[0].features.idx == std::vector<std::int64_t>{0, 5});
  CHECK(data.examples[0].features.val == std::vector<double>{1.0, 2.0});
  CHECK(data.examples[1].features.idx == std::vector<std::int64_t>{3});
}

TEST_CASE("load_sparse multi-label lines") {
  const std::string path = temp_path("multi.txt");
  write_file(path, "3,7,12 0:1 2:0.5\n4 1:1\n");
  const Dataset data = load_sparse(path, 5);
  CHECK(data.examples[0].labels == std::vector<std::int32_t>{3, 7, 12});
  CHECK(data.examples[1].labels == std::vector<std::int32_t>{4});
}

TEST_CASE("load_sparse error reporting") {
  const std::string empty = temp_path("empty.txt");
  write_file(empty, "");
  CHECK_THROWS_WITH_AS(load_sparse(empty, 4), doctest::Contains("no examples"),
                       std::runtime_error);
  const std::string bad = temp_path("bad.txt");
  write_file(bad, "1 0:1.0\n0 nonsense\n");
  CHECK_THROWS_WITH_AS(load_sparse(bad, 4), doctest::Contains(":2:"),
                       std::runtime_error);
  const std::string oob = temp_path("oob.txt");
  write_file(oob, "1 9:1.0\n");
  CHECK_THROWS_WITH_AS(load_sparse(oob, 4), doctest::Contains("declared dim"),
                       std::runtime_error);
  CHECK_THROWS_AS(load_sparse(temp_path("missing.txt"), 4),
                  std::runtime_error);
}

TEST_CASE("sparse save/load round trip on random examples") {
  Rng rng(23);
  Dataset data;
  data.kind = DataKind::kSparse;
  data.dim = 64;
  for (int i = 0; i < 100; ++i) {
    SparseExample ex;
    ex.features.dim = 64;
    for (std::int64_t j = 0; j < 64; ++j) {
      if (rng.uniform() < 0.15) ex.features.push(j, rng.normal() * 3.0);
    }
    ex.labels.push_back(static_cast<std::int32_t>(rng.below(2)));
    data.examples.push_back(std::move(ex));
  }
  const std::string path = temp_path("roundtrip.txt");
  save_sparse(data, path);
  const Dataset back = load_sparse(path, 64);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    CHECK(back.examples[i].labels == data.examples[i].labels);
    CHECK(back.examples[i].features.idx == data.examples[i].features.idx);
    CHECK(back.examples[i].features.val == data.examples[i].features.val);
  }
}

TEST_CASE("ratings loader remaps ids and keeps duplicates") {
  const std::string path = temp_path("ratings.txt");
  write_file(path, "196\t242\t3.0\n186\t302\t3.0\n196\t242\t4.0\n");
  const Dataset data = load_ratings(path);
  REQUIRE(data.size() == 3);  // duplicate (user, item) kept
  CHECK(data.num_users == 2);
  CHECK(data.num_items == 2);
  CHECK(data.ratings[0].user == 0);
  CHECK(data.ratings[1].user == 1);
  CHECK(data.ratings[2].user == 0);
  CHECK(data.ratings[2].rating == 4.0);
  CHECK(data.user_ids[0] == "196");

  // remap stability across a save/load round trip
  const std::string again = temp_path("ratings2.txt");
  save_ratings(data, again);
  const Dataset back = load_ratings(again);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.ratings.size(); ++i) {
    CHECK(back.ratings[i].user == data.ratings[i].user);
    CHECK(back.ratings[i].item == data.ratings[i].item);
    CHECK(back.ratings[i].rating == data.ratings[i].rating);
  }
  CHECK(back.user_ids == data.user_ids);
  CHECK(back.item_ids == data.item_ids);
}

TEST_CASE("synthetic generation is deterministic per seed") {
  SynthSpec spec{200, 50, 5, 10, 0.1, 99};
  const auto [train_a, test_a] = gen_synthetic(spec);
  const auto [train_b, test_b] = gen_synthetic(spec);
  REQUIRE(train_a.size() == 200);
  REQUIRE(test_a.size() == 40);
  for (std::size_t i = 0; i < train_a.examples.size(); ++i) {
    CHECK(train_a.examples[i].labels == train_b.examples[i].labels);
    CHECK(train_a.examples[i].features.idx ==
          train_b.examples[i].features.idx);
    CHECK(train_a.examples[i].features.val ==
          train_b.examples[i].features.val);
  }
  spec.seed = 100;
  const auto [train_c, test_c] = gen_synthetic(spec);
  bool any_diff = false;
  for (std::size_t i = 0; i < train_a.examples.size() && !any_diff; ++i) {
    any_diff = train_a.examples[i].features.idx !=
               train_c.examples[i].features.idx;
  }
  CHECK(any_diff);
}

TEST_CASE("synthetic data with sparsity=d is dense") {
  SynthSpec spec{10, 8, 8, 4, 0.0, 1};
  const auto [train, test] = gen_synthetic(spec);
  for (const auto& ex : train.examples) CHECK(ex.features.nnz() == 8);
}

TEST_CASE("noise-free synthetic data is fit above 95% by plain logistic") {
  SynthSpec spec{2000, 60, 8, 30, 0.0, 7};
  const auto [train, test] = gen_synthetic(spec);
  Rng rng(1);
  ModelParams params = init_params(LogRegSpec{60}, rng);
  BatchSampler sampler(train.size(), 3);
  std::vector<std::int64_t> batch;
  for (int step = 0; step < 4000; ++step) {
    sampler.sample(50, batch);
    reference::sgd_step(params, train, batch, 3.0);
  }
  const EvalResult result = batch_eval_serial(params, train);
  CHECK(result.metric > 0.95);
}

TEST_CASE("batch sampler basics") {
  BatchSampler sampler(10, 5);
  std::vector<std::int64_t> batch;
  sampler.sample(10, batch);  // b = n covers everything
  std::set<std::int64_t> seen(batch.begin(), batch.end());
  CHECK(seen.size() == 10);
  sampler.sample(1, batch);
  CHECK(batch.size() == 1);
  CHECK_THROWS(sampler.sample(11, batch));
  CHECK_THROWS(sampler.sample(0, batch));
}

TEST_CASE("batch sampler never repeats inside one batch") {
  BatchSampler sampler(30, 9);
  std::vector<std::int64_t> batch;
  for (int rep = 0; rep < 500; ++rep) {
    sampler.sample(7, batch);
    std::set<std::int64_t> seen(batch.begin(), batch.end());
    CHECK(seen.size() == 7);
  }
}

TEST_CASE("batch sampler frequencies are uniform within 3 sigma") {
  const std::int64_t n = 20, b = 5, draws = 100000;
  BatchSampler sampler(n, 41);
  std::vector<std::int64_t> batch;
  std::vector<std::int64_t> counts(n, 0);
  for (std::int64_t rep = 0; rep < draws; ++rep) {
    sampler.sample(b, batch);
    for (const std::int64_t i : batch) ++counts[i];
  }
  const double p = static_cast<double>(b) / static_cast<double>(n);
  const double mean = p * static_cast<double>(draws);
  const double sd = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));
  for (const std::int64_t c : counts) {
    CHECK(std::fabs(static_cast<double>(c) - mean) < 3.0 * sd);
  }
}

TEST_CASE("sampler determinism per seed") {
  BatchSampler a(100, 7), b(100, 7), c(100, 8);
  std::vector<std::int64_t> ba, bb, bc;
  for (int i = 0; i < 10; ++i) {
    a.sample(16, ba);
    b.sample(16, bb);
    c.sample(16, bc);
    CHECK(ba == bb);
  }
  CHECK(ba != bc);
}

TEST_CASE("record split keeps sizes and metadata") {
  const std::string path = temp_path("ratings3.txt");
  std::ofstream out(path);
  for (int i = 0; i < 100; ++i) {
    out << "u" << i % 10 << "\ti" << i % 7 << "\t" << (i % 5) + 1 << ".0\n";
  }
  out.close();
  const Dataset all = load_ratings(path);
  Rng rng(3, RngStream::kSplit);
  const auto [train, test] = split_dataset(all, 0.1, rng);
  CHECK(train.size() == 90);
  CHECK(test.size() == 10);
  CHECK(train.num_users == all.num_users);
  CHECK(test.num_items == all.num_items);
}
