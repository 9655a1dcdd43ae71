#include "gfl/graphgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace gfl::graphgen {

namespace {

constexpr std::size_t kSampleSize = 800;
constexpr std::size_t kTrainMin = 30;
constexpr std::size_t kTrainMax = 50;
constexpr double kClassStdLimit = 2.5;
constexpr std::size_t kSubgraphSize = 300;

std::vector<std::vector<std::uint32_t>> components_of(
    const Graph& g, const std::vector<std::uint32_t>& nodes) {
  std::vector<std::int64_t> index(g.n, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    index[nodes[i]] = static_cast<std::int64_t>(i);
  }
  auto adj = g.adjacency_lists();
  std::vector<bool> seen(nodes.size(), false);
  std::vector<std::vector<std::uint32_t>> comps;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (seen[i]) continue;
    std::vector<std::uint32_t> comp;
    std::vector<std::size_t> stack{i};
    seen[i] = true;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      comp.push_back(nodes[cur]);
      for (std::uint32_t nb : adj[nodes[cur]]) {
        if (index[nb] >= 0 && !seen[static_cast<std::size_t>(index[nb])]) {
          seen[static_cast<std::size_t>(index[nb])] = true;
          stack.push_back(static_cast<std::size_t>(index[nb]));
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  // deterministic order: by smallest member id
  std::sort(comps.begin(), comps.end());
  return comps;
}

}  // namespace

std::optional<SubgraphSplit> subcora_split(const Graph& g,
                                           const std::vector<int>& class_ids,
                                           RandomStream& rng) {
  if (class_ids.size() != g.n) {
    throw std::invalid_argument("subcora_split: class vector length");
  }
  std::set<int> distinct(class_ids.begin(), class_ids.end());
  if (distinct.size() < 7) {
    throw std::invalid_argument("subcora_split: fewer than 7 classes");
  }
  const std::size_t num_classes = distinct.size();

  // step 1: sample 800 nodes and split them into connected components
  std::vector<std::uint32_t> ids(g.n);
  std::iota(ids.begin(), ids.end(), 0u);
  rng.shuffle(ids);
  ids.resize(std::min<std::size_t>(kSampleSize, ids.size()));
  auto comps = components_of(g, ids);

  // step 2: first component usable as a training set
  std::vector<std::uint32_t> train;
  for (const auto& comp : comps) {
    if (comp.size() < kTrainMin || comp.size() > kTrainMax) continue;
    std::vector<std::size_t> counts(num_classes, 0);
    std::vector<int> sorted_classes(distinct.begin(), distinct.end());
    bool in_range = true;
    for (std::uint32_t u : comp) {
      const auto it = std::lower_bound(sorted_classes.begin(),
                                       sorted_classes.end(), class_ids[u]);
      if (it == sorted_classes.end() || *it != class_ids[u]) {
        in_range = false;
        break;
      }
      counts[static_cast<std::size_t>(it - sorted_classes.begin())] += 1;
    }
    if (!in_range) continue;
    if (std::count(counts.begin(), counts.end(), 0) > 0) continue;
    double mean = 0.0;
    for (std::size_t c : counts) mean += static_cast<double>(c);
    mean /= static_cast<double>(num_classes);
    double var = 0.0;
    for (std::size_t c : counts) {
      const double d = static_cast<double>(c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(num_classes);
    if (std::sqrt(var) > kClassStdLimit) continue;
    train = comp;
    break;
  }
  if (train.empty()) return std::nullopt;

  // step 3: BFS from the training set; depth <= 2 nodes feed validation
  auto adj = g.adjacency_lists();
  std::vector<int> dist(g.n, -1);
  std::queue<std::uint32_t> queue;
  for (std::uint32_t u : train) {
    dist[u] = 0;
    queue.push(u);
  }
  while (!queue.empty()) {
    const std::uint32_t u = queue.front();
    queue.pop();
    for (std::uint32_t v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push(v);
      }
    }
  }

  std::vector<std::uint32_t> near;  // depth 1..2, validation candidates
  for (std::uint32_t u = 0; u < g.n; ++u) {
    if (dist[u] == 1 || dist[u] == 2) near.push_back(u);
  }
  if (near.size() < train.size()) return std::nullopt;
  rng.shuffle(near);
  std::vector<std::uint32_t> valid(near.begin(), near.begin() + train.size());
  std::sort(valid.begin(), valid.end());

  // pad to 300 nodes, closest to the training set first
  const std::size_t need = kSubgraphSize;
  if (g.n < need) return std::nullopt;
  std::vector<bool> taken(g.n, false);
  for (std::uint32_t u : train) taken[u] = true;
  for (std::uint32_t u : valid) taken[u] = true;

  std::vector<std::uint32_t> rest;
  for (std::uint32_t u = 0; u < g.n; ++u) {
    if (!taken[u]) rest.push_back(u);
  }
  std::stable_sort(rest.begin(), rest.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     const int da = dist[a] < 0 ? g.n : dist[a];
                     const int db = dist[b] < 0 ? g.n : dist[b];
                     return da < db;
                   });
  const std::size_t test_count = need - train.size() - valid.size();
  if (rest.size() < test_count) return std::nullopt;
  std::vector<std::uint32_t> test(rest.begin(), rest.begin() + test_count);
  std::sort(test.begin(), test.end());

  SubgraphSplit out;
  out.train = std::move(train);
  out.valid = std::move(valid);
  out.test = std::move(test);
  out.nodes.reserve(need);
  out.nodes.insert(out.nodes.end(), out.train.begin(), out.train.end());
  out.nodes.insert(out.nodes.end(), out.valid.begin(), out.valid.end());
  out.nodes.insert(out.nodes.end(), out.test.begin(), out.test.end());
  std::sort(out.nodes.begin(), out.nodes.end());
  return out;
}

}  // namespace gfl::graphgen
