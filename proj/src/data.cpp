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

#include "dp2/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace dp2 {

namespace {

[[noreturn]] void parse_error(const std::string& path, std::int64_t line,
                              const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view s, const std::string& path,
                    std::int64_t line) {
  // std::from_chars for doubles is incomplete in some libstdc++ versions;
  // strtod on a bounded copy keeps parsing locale-independent enough here.
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty()) {
    parse_error(path, line, "bad number '" + buf + "'");
  }
  if (!std::isfinite(v)) parse_error(path, line, "non-finite number");
  return v;
}

std::int64_t parse_int(std::string_view s, const std::string& path,
                       std::int64_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    parse_error(path, line, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

Dataset load_sparse(const std::string& path, std::int64_t dim) {
  std::ifstream in = open_for_read(path);
  Dataset data;
  data.kind = DataKind::kSparse;
  std::string line;
  std::int64_t line_no = 0;
  std::int64_t max_index = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) parse_error(path, line_no, "missing label");
    SparseExample ex;
    std::string_view labels(tok);
    while (!labels.empty()) {
      const std::size_t comma = labels.find(',');
      const std::string_view one = labels.substr(0, comma);
      ex.labels.push_back(
          static_cast<std::int32_t>(parse_int(one, path, line_no)));
      if (comma == std::string_view::npos) break;
      labels.remove_prefix(comma + 1);
    }
    std::int64_t prev = -1;
    while (ss >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        parse_error(path, line_no, "expected idx:val, got '" + tok + "'");
      }
      const std::int64_t idx =
          parse_int(std::string_view(tok).substr(0, colon), path, line_no);
      const double val =
          parse_double(std::string_view(tok).substr(colon + 1), path, line_no);
      if (idx <= prev) {
        parse_error(path, line_no, "feature indices must be ascending");
      }
      if (dim > 0 && idx >= dim) {
        parse_error(path, line_no, "feature index " + std::to_string(idx) +
                                       " >= declared dim " +
                                       std::to_string(dim));
      }
      ex.features.push(idx, val);
      prev = idx;
    }
    max_index = std::max(max_index, prev);
    data.examples.push_back(std::move(ex));
  }
  if (data.examples.empty()) {
    throw std::runtime_error(path + ": no examples");
  }
  data.dim = dim > 0 ? dim : max_index + 1;
  for (auto& ex : data.examples) ex.features.dim = data.dim;
  return data;
}

void save_sparse(const Dataset& data, const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (const auto& ex : data.examples) {
    for (std::size_t k = 0; k < ex.labels.size(); ++k) {
      out << (k ? "," : "") << ex.labels[k];
    }
    for (std::int64_t k = 0; k < ex.features.nnz(); ++k) {
      out << ' ' << ex.features.idx[k] << ':'
          << format_double(ex.features.val[k]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_ratings(const std::string& path) {
  std::ifstream in = open_for_read(path);
  Dataset data;
  data.kind = DataKind::kRatings;
  std::unordered_map<std::string, std::int64_t> user_map, item_map;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string user, item, rating;
    if (!(ss >> user >> item >> rating)) {
      parse_error(path, line_no, "expected 'user item rating'");
    }
    std::string extra;
    if (ss >> extra) parse_error(path, line_no, "trailing tokens");
    auto [uit, unew] = user_map.try_emplace(
        user, static_cast<std::int64_t>(data.user_ids.size()));
    if (unew) data.user_ids.push_back(user);
    auto [iit, inew] = item_map.try_emplace(
        item, static_cast<std::int64_t>(data.item_ids.size()));
    if (inew) data.item_ids.push_back(item);
    data.ratings.push_back(
        {uit->second, iit->second, parse_double(rating, path, line_no)});
  }
  if (data.ratings.empty()) throw std::runtime_error(path + ": no ratings");
  data.num_users = static_cast<std::int64_t>(data.user_ids.size());
  data.num_items = static_cast<std::int64_t>(data.item_ids.size());
  return data;
}

void save_ratings(const Dataset& data, const std::string& path) {
  std::ofstream out = open_for_write(path);
  for (const auto& r : data.ratings) {
    const std::string& user = data.user_ids.empty()
                                  ? std::to_string(r.user)
                                  : data.user_ids[r.user];
    const std::string& item = data.item_ids.empty()
                                  ? std::to_string(r.item)
                                  : data.item_ids[r.item];
    out << user << '\t' << item << '\t' << format_double(r.rating) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Distinct active feature indices, ascending. Uniform features use partial
// Fisher-Yates on the persistent scratch permutation; skewed features use
// inverse-CDF draws with duplicate rejection.
std::vector<std::int64_t> draw_active(const SynthSpec& spec,
                                      const std::vector<double>& cdf,
                                      std::vector<std::int64_t>& scratch,
                                      Rng& rng) {
  const std::int64_t k = spec.sparsity;
  std::vector<std::int64_t> active;
  if (cdf.empty()) {
    for (std::int64_t i = 0; i < k; ++i) {
      const std::int64_t j = i + rng.below(spec.d - i);
      std::swap(scratch[i], scratch[j]);
    }
    active.assign(scratch.begin(), scratch.begin() + k);
  } else {
    active.reserve(static_cast<std::size_t>(k));
    while (static_cast<std::int64_t>(active.size()) < k) {
      const double u = rng.uniform() * cdf.back();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto idx = static_cast<std::int64_t>(it - cdf.begin());
      if (std::find(active.begin(), active.end(), idx) == active.end()) {
        active.push_back(idx);
      }
    }
  }
  std::sort(active.begin(), active.end());
  return active;
}

SparseExample draw_example(const SynthSpec& spec, const DenseVec& hidden,
                           const std::vector<double>& cdf,
                           std::vector<std::int64_t>& scratch, Rng& rng) {
  SparseExample ex;
  ex.features.dim = spec.d;
  double z = 0.0;
  for (std::int64_t idx : draw_active(spec, cdf, scratch, rng)) {
    double v = rng.normal();
    if (spec.nonneg_values) v = std::fabs(v);
    if (spec.value_scale_min < 1.0) {
      v *= std::pow(spec.value_scale_min,
                    static_cast<double>(idx) / static_cast<double>(spec.d - 1));
    }
    ex.features.push(idx, v);
    z += hidden[idx] * v;
  }
  std::int32_t label = z > 0.0 ? 1 : 0;
  if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) {
    label = 1 - label;
  }
  ex.labels.push_back(label);
  return ex;
}

}  // namespace

std::pair<Dataset, Dataset> gen_synthetic(const SynthSpec& spec) {
  if (spec.n < 1 || spec.d < 1) {
    throw std::invalid_argument("gen_synthetic: n and d must be >= 1");
  }
  if (spec.sparsity < 1 || spec.sparsity > spec.d) {
    throw std::invalid_argument("gen_synthetic: need 1 <= sparsity <= d");
  }
  if (spec.num_informative < 1 || spec.num_informative > spec.d) {
    throw std::invalid_argument("gen_synthetic: need 1 <= num_informative <= d");
  }
  if (spec.zipf < 0.0) {
    throw std::invalid_argument("gen_synthetic: zipf must be >= 0");
  }
  Rng rng(spec.seed, RngStream::kData);
  // Informative features spread evenly across the index range, so with a
  // skewed frequency profile they cover frequent and rare features alike.
  // Informative coordinates contribute equally to the label regardless of
  // their value scale, so the optimum needs weight magnitudes ~ 1/scale.
  DenseVec hidden(spec.d, 0.0);
  const auto lo = static_cast<std::int64_t>(spec.informative_tail_start *
                                            static_cast<double>(spec.d));
  for (std::int64_t k = 0; k < spec.num_informative; ++k) {
    const std::int64_t idx = lo + k * (spec.d - lo) / spec.num_informative;
    double w = rng.normal();
    if (spec.value_scale_min < 1.0) {
      w /= std::pow(spec.value_scale_min,
                    static_cast<double>(idx) / static_cast<double>(spec.d - 1));
    }
    hidden[idx] = w;
  }
  std::vector<double> cdf;
  if (spec.zipf > 0.0) {
    cdf.resize(static_cast<std::size_t>(spec.d));
    double total = 0.0;
    for (std::int64_t j = 0; j < spec.d; ++j) {
      total += std::pow(static_cast<double>(j + 1), -spec.zipf);
      cdf[static_cast<std::size_t>(j)] = total;
    }
  }
  std::vector<std::int64_t> scratch(static_cast<std::size_t>(spec.d));
  for (std::int64_t j = 0; j < spec.d; ++j) scratch[j] = j;

  Dataset train, test;
  train.kind = test.kind = DataKind::kSparse;
  train.dim = test.dim = spec.d;
  const std::int64_t n_test = std::max<std::int64_t>(spec.n / 5, 1);
  train.examples.reserve(spec.n);
  test.examples.reserve(n_test);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    train.examples.push_back(draw_example(spec, hidden, cdf, scratch, rng));
  }
  for (std::int64_t i = 0; i < n_test; ++i) {
    test.examples.push_back(draw_example(spec, hidden, cdf, scratch, rng));
  }
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double test_fraction, Rng& rng) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("split_dataset: test_fraction in [0, 1)");
  }
  const std::int64_t n = data.size();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) order[i] = i;
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  const auto n_test = static_cast<std::int64_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  Dataset train = data, test = data;
  train.examples.clear();
  train.ratings.clear();
  test.examples.clear();
  test.ratings.clear();
  for (std::int64_t i = 0; i < n; ++i) {
    Dataset& dst = i < n_test ? test : train;
    if (data.kind == DataKind::kSparse) {
      dst.examples.push_back(data.examples[order[i]]);
    } else {
      dst.ratings.push_back(data.ratings[order[i]]);
    }
  }
  return {std::move(train), std::move(test)};
}

BatchSampler::BatchSampler(std::int64_t n, std::uint64_t seed)
    : n_(n), rng_(seed, RngStream::kSampler) {
  if (n < 1) throw std::invalid_argument("BatchSampler: empty population");
  perm_.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) perm_[i] = i;
}

void BatchSampler::sample(std::int64_t b, std::vector<std::int64_t>& out) {
  if (b <= 0 || b > n_) {
    throw std::invalid_argument("BatchSampler: batch size " +
                                std::to_string(b) + " not in [1, " +
                                std::to_string(n_) + "]");
  }
  for (std::int64_t i = 0; i < b; ++i) {
    const std::int64_t j = i + rng_.below(n_ - i);
    std::swap(perm_[i], perm_[j]);
  }
  out.assign(perm_.begin(), perm_.begin() + b);
}

}  // namespace dp2
