#include "gfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gfl::labkit {

using graphgen::Split;
using graphgen::SplitGranularity;
using numkit::DenseMatrix;

namespace {

std::size_t argmax_low(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;  // ties keep the lower index
  }
  return best;
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EvalPass make_eval_pass(const encoder::ModelParams& params,
                        const graphgen::PropagationMatrix& prop,
                        const graphgen::ClientDataset& data) {
  const std::size_t n = data.num_clients();
  const std::size_t c = data.num_classes;
  if (prop.matrix.rows != n) {
    throw std::invalid_argument("evaluate: propagation size != client count");
  }
  EvalPass pass;
  pass.outputs = encoder::forward_rows(data.features, params).outputs;
  pass.h_mean = DenseMatrix(n, c);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t begin = data.row_offset[k];
    const std::size_t count = data.rows_of(k);
    for (std::size_t r = begin; r < begin + count; ++r) {
      for (std::size_t i = 0; i < c; ++i) {
        pass.h_mean.at(k, i) += pass.outputs.at(r, i);
      }
    }
    for (std::size_t i = 0; i < c; ++i) {
      pass.h_mean.at(k, i) /= static_cast<double>(count);
    }
  }
  pass.z = numkit::matmul(prop.matrix, pass.h_mean);
  return pass;
}

Metrics evaluate(const EvalPass& pass, const graphgen::PropagationMatrix& prop,
                 const graphgen::ClientDataset& data, Split split) {
  const std::size_t n = data.num_clients();
  const std::size_t c = data.num_classes;
  double loss = 0.0;
  std::size_t correct = 0, total = 0;
  std::vector<double> logits(c);

  if (data.granularity == SplitGranularity::per_client) {
    for (std::size_t k = 0; k < n; ++k) {
      if (data.client_split[k] != split) continue;
      std::copy(pass.z.row(k).begin(), pass.z.row(k).end(), logits.begin());
      numkit::softmax_inplace(logits);
      auto y = data.labels.row(data.row_offset[k]);
      loss += numkit::cross_entropy(y, logits);
      correct += argmax_low(logits) == argmax_low(y) ? 1 : 0;
      ++total;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      const double a_kk = prop.matrix.at(k, k);
      // context of client k = Z_k - a_kk * mean hidden of k
      std::vector<double> ctx(c);
      for (std::size_t i = 0; i < c; ++i) {
        ctx[i] = pass.z.at(k, i) - a_kk * pass.h_mean.at(k, i);
      }
      const std::size_t begin = data.row_offset[k];
      for (std::size_t r = begin; r < data.row_offset[k + 1]; ++r) {
        if (data.row_split[r] != split) continue;
        for (std::size_t i = 0; i < c; ++i) {
          logits[i] = a_kk * pass.outputs.at(r, i) + ctx[i];
        }
        numkit::softmax_inplace(logits);
        auto y = data.labels.row(r);
        loss += numkit::cross_entropy(y, logits);
        correct += argmax_low(logits) == argmax_low(y) ? 1 : 0;
        ++total;
      }
    }
  }
  if (total == 0) throw std::invalid_argument("evaluate: empty split");
  return {loss / static_cast<double>(total),
          static_cast<double>(correct) / static_cast<double>(total)};
}

Metrics evaluate(const encoder::ModelParams& params,
                 const graphgen::PropagationMatrix& prop,
                 const graphgen::ClientDataset& data, Split split) {
  return evaluate(make_eval_pass(params, prop, data), prop, data, split);
}

HeterogeneityReport empirical_heterogeneity(
    const std::vector<std::vector<double>>& per_client_gradients,
    const graphgen::Graph& g) {
  const std::size_t n = g.n;
  if (per_client_gradients.size() != n) {
    throw std::invalid_argument(
        "empirical_heterogeneity: one gradient per client required");
  }
  if (n == 0) throw std::invalid_argument("empirical_heterogeneity: empty");
  const std::size_t dim = per_client_gradients.front().size();
  for (const auto& grad : per_client_gradients) {
    if (grad.size() != dim) {
      throw std::invalid_argument("empirical_heterogeneity: ragged gradients");
    }
  }

  HeterogeneityReport rep;
  for (auto [u, v] : g.edges) {
    double acc = 0.0;
    const auto& gu = per_client_gradients[u];
    const auto& gv = per_client_gradients[v];
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = gu[i] - gv[i];
      acc += d * d;
    }
    rep.kappa_sq += acc;
  }

  std::vector<double> mean(dim, 0.0);
  for (const auto& grad : per_client_gradients) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += grad[i];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  double sum_dev = 0.0;
  for (const auto& grad : per_client_gradients) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = grad[i] - mean[i];
      sum_dev += d * d;
    }
  }
  rep.lhs = sum_dev / static_cast<double>(n);

  rep.bound = rep.kappa_sq * graphgen::connectivity_index(g);
  rep.within_bound = rep.lhs <= rep.bound + 1e-9;
  return rep;
}

ExperimentSummary summarize(const std::vector<std::uint64_t>& seeds,
                            const std::vector<double>& test_acc) {
  if (seeds.empty() || seeds.size() != test_acc.size()) {
    throw std::invalid_argument("summarize: empty or mismatched samples");
  }
  ExperimentSummary s;
  s.seeds = seeds;
  s.test_acc = test_acc;
  double sum = 0.0;
  double lo = test_acc.front(), hi = test_acc.front();
  for (double a : test_acc) {
    sum += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  // fixed-order mean, clamped into [min, max] against 1-ulp overshoot
  s.mean = std::clamp(sum / static_cast<double>(test_acc.size()), lo, hi);
  if (test_acc.size() >= 2) {
    const bool constant = std::all_of(
        test_acc.begin(), test_acc.end(),
        [&](double a) { return a == test_acc.front(); });
    double ss = 0.0;
    for (double a : test_acc) ss += (a - s.mean) * (a - s.mean);
    const double stddev =
        constant ? 0.0
                 : std::sqrt(ss / static_cast<double>(test_acc.size() - 1));
    s.ci95_half_width =
        1.96 * stddev / std::sqrt(static_cast<double>(test_acc.size()));
  }
  return s;
}

void write_metrics(const TrainingHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "update,train_loss,valid_loss,train_acc,valid_acc\n";
  for (const RoundRecord& r : history.records) {
    out << r.update << "," << format17(r.train_loss) << ","
        << format17(r.valid_loss) << "," << format17(r.train_acc) << ","
        << format17(r.valid_acc) << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_metrics(const ExperimentSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  std::istringstream echo(summary.config_echo);
  std::string line;
  while (std::getline(echo, line)) {
    if (!line.empty()) out << "# " << line << "\n";
  }
  out << "# seeds = " << summary.seeds.size() << "\n";
  if (summary.ci95_half_width) {
    out << "# ci95_half_width = " << format17(*summary.ci95_half_width) << "\n";
  }
  if (summary.connectivity) {
    out << "# connectivity_index = " << format17(*summary.connectivity) << "\n";
  }
  out << "seed,test_acc\n";
  for (std::size_t i = 0; i < summary.seeds.size(); ++i) {
    out << summary.seeds[i] << "," << format17(summary.test_acc[i]) << "\n";
  }
  out << "mean," << format17(summary.mean) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<RoundRecord> read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<RoundRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RoundRecord r;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    if (!(ss >> r.update >> r.train_loss >> r.valid_loss >> r.train_acc >>
          r.valid_acc)) {
      throw std::runtime_error(path + ": bad record '" + line + "'");
    }
    records.push_back(r);
  }
  return records;
}

ExperimentSummary read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ExperimentSummary s;
  std::string line;
  std::ostringstream echo;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(line.find_first_not_of("# "));
      if (body.rfind("ci95_half_width = ", 0) == 0) {
        s.ci95_half_width = std::stod(body.substr(18));
      } else if (body.rfind("connectivity_index = ", 0) == 0) {
        s.connectivity = std::stod(body.substr(21));
      } else if (body.rfind("seeds = ", 0) != 0) {
        echo << body << "\n";
      }
      continue;
    }
    if (line.rfind("seed,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(path + ": bad row '" + line + "'");
    }
    const std::string head = line.substr(0, comma);
    const double value = std::stod(line.substr(comma + 1));
    if (head == "mean") {
      s.mean = value;
    } else {
      s.seeds.push_back(std::stoull(head));
      s.test_acc.push_back(value);
    }
  }
  s.config_echo = echo.str();
  return s;
}

}  // namespace gfl::labkit
