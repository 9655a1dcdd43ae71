#include "gfl/graphgen.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gfl::graphgen {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool blank_or_comment(const std::string& s) {
  for (char ch : s) {
    if (ch == '#') return true;
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

double parse_double(const std::string& path, std::size_t lineno,
                    const std::string& field) {
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    while (used < field.size() &&
           std::isspace(static_cast<unsigned char>(field[used]))) {
      ++used;
    }
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    parse_fail(path, lineno, "non-numeric field '" + field + "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    default: return "test";
  }
}

Split split_from(const std::string& path, std::size_t lineno,
                 const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  parse_fail(path, lineno, "unknown split '" + name + "'");
}

}  // namespace

std::pair<Graph, ClientDataset> load_graph_files(
    const std::string& edge_path, const std::string& feature_path,
    const std::string& label_path) {
  // features fix the node count; one row per node
  auto feature_lines = read_lines(feature_path);
  std::vector<std::vector<double>> rows;
  std::size_t arity = 0;
  for (std::size_t i = 0; i < feature_lines.size(); ++i) {
    const std::string& line = feature_lines[i];
    if (blank_or_comment(line)) continue;
    auto fields = split_csv(line);
    if (arity == 0) arity = fields.size();
    if (fields.size() != arity) {
      parse_fail(feature_path, i + 1,
                 "expected " + std::to_string(arity) + " fields, got " +
                     std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_double(feature_path, i + 1, fields[j]);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(feature_path + ": no feature rows");
  const std::size_t n = rows.size();

  auto label_lines = read_lines(label_path);
  std::vector<int> class_ids;
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    if (blank_or_comment(label_lines[i])) continue;
    const double v = parse_double(label_path, i + 1, label_lines[i]);
    const int id = static_cast<int>(std::lround(v));
    if (id < 0 || std::abs(v - id) > 1e-9) {
      parse_fail(label_path, i + 1, "label is not a class index");
    }
    class_ids.push_back(id);
  }
  if (class_ids.size() != n) {
    throw std::runtime_error(label_path + ": row count differs from " +
                             feature_path);
  }
  int num_classes = 0;
  for (int id : class_ids) num_classes = std::max(num_classes, id + 1);

  auto edge_lines = read_lines(edge_path);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    const std::string& line = edge_lines[i];
    if (blank_or_comment(line)) continue;
    std::istringstream ss(line);
    long long u = -1, v = -1;
    std::string extra;
    if (!(ss >> u >> v) || (ss >> extra)) {
      parse_fail(edge_path, i + 1, "expected two node ids");
    }
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n ||
        static_cast<std::size_t>(v) >= n) {
      parse_fail(edge_path, i + 1, "node id out of range");
    }
    if (u == v) parse_fail(edge_path, i + 1, "self-loop");
    edges.emplace_back(static_cast<std::uint32_t>(u),
                       static_cast<std::uint32_t>(v));
  }
  Graph g(n, std::move(edges));  // duplicates collapse here

  ClientDataset ds;
  ds.feature_dim = arity;
  ds.num_classes = static_cast<std::size_t>(num_classes);
  ds.granularity = SplitGranularity::per_client;
  ds.features = DenseMatrix(n, arity);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(rows[i].begin(), rows[i].end(),
              ds.features.data.begin() + i * arity);
  }
  ds.labels = DenseMatrix(n, ds.num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.at(i, static_cast<std::size_t>(class_ids[i])) = 1.0;
  }
  ds.row_offset.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) ds.row_offset[i] = i;
  ds.client_split.assign(n, Split::test);
  ds.labeled.assign(n, false);
  return {std::move(g), std::move(ds)};
}

void write_graph_files(const std::string& dir, const Graph& g,
                       const ClientDataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::ofstream out(dir + "/edges.txt");
    if (!out) throw std::runtime_error("cannot write " + dir + "/edges.txt");
    for (auto [u, v] : g.edges) out << u << " " << v << "\n";
  }

  const bool single_row = ds.total_rows() == ds.num_clients();
  char buf[64];
  {
    std::ofstream out(dir + "/features.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/features.csv");
    for (std::size_t k = 0; k < ds.num_clients(); ++k) {
      for (std::size_t r = ds.row_offset[k]; r < ds.row_offset[k + 1]; ++r) {
        if (!single_row) out << k << "," << (r - ds.row_offset[k]) << ",";
        auto row = ds.features.row(r);
        for (std::size_t q = 0; q < row.size(); ++q) {
          std::snprintf(buf, sizeof buf, "%.17g", row[q]);
          out << (q ? "," : "") << buf;
        }
        out << "\n";
      }
    }
  }
  {
    std::ofstream out(dir + "/labels.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/labels.csv");
    for (std::size_t k = 0; k < ds.num_clients(); ++k) {
      for (std::size_t r = ds.row_offset[k]; r < ds.row_offset[k + 1]; ++r) {
        std::size_t cls = 0;
        auto row = ds.labels.row(r);
        for (std::size_t i = 1; i < row.size(); ++i) {
          if (row[i] > row[cls]) cls = i;
        }
        if (!single_row) out << k << "," << (r - ds.row_offset[k]) << ",";
        out << cls << "\n";
      }
    }
  }
  {
    std::ofstream out(dir + "/split.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/split.csv");
    if (ds.granularity == SplitGranularity::per_client) {
      for (std::size_t k = 0; k < ds.num_clients(); ++k) {
        out << k << "," << split_name(ds.client_split[k]) << "\n";
      }
    } else {
      for (std::size_t k = 0; k < ds.num_clients(); ++k) {
        for (std::size_t r = ds.row_offset[k]; r < ds.row_offset[k + 1]; ++r) {
          out << k << "," << (r - ds.row_offset[k]) << ","
              << split_name(ds.row_split[r]) << "\n";
        }
      }
    }
  }
}

void load_split_file(const std::string& path, ClientDataset& ds) {
  auto lines = read_lines(path);
  bool any_row_level = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank_or_comment(lines[i])) continue;
    auto fields = split_csv(lines[i]);
    if (fields.size() == 2) {
      const auto k = static_cast<std::size_t>(
          parse_double(path, i + 1, fields[0]));
      if (k >= ds.num_clients()) parse_fail(path, i + 1, "client out of range");
      ds.client_split[k] = split_from(path, i + 1, fields[1]);
    } else if (fields.size() == 3) {
      any_row_level = true;
      const auto k = static_cast<std::size_t>(
          parse_double(path, i + 1, fields[0]));
      const auto r = static_cast<std::size_t>(
          parse_double(path, i + 1, fields[1]));
      if (k >= ds.num_clients() || r >= ds.rows_of(k)) {
        parse_fail(path, i + 1, "client/row out of range");
      }
      if (ds.row_split.size() != ds.total_rows()) {
        ds.row_split.assign(ds.total_rows(), Split::test);
      }
      ds.row_split[ds.row_offset[k] + r] = split_from(path, i + 1, fields[2]);
    } else {
      parse_fail(path, i + 1, "expected 2 or 3 fields");
    }
  }
  if (any_row_level) {
    ds.granularity = SplitGranularity::per_row;
    ds.client_split.assign(ds.num_clients(), Split::train);
    ds.labeled.assign(ds.num_clients(), true);
  } else {
    ds.granularity = SplitGranularity::per_client;
    for (std::size_t k = 0; k < ds.num_clients(); ++k) {
      ds.labeled[k] = ds.client_split[k] == Split::train;
    }
  }
}

}  // namespace gfl::graphgen
