#include "gsarah/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gsarah/rng.hpp"

namespace gsarah {

namespace {

bool parse_double_strict(const std::string& s, double* out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    return false;
  }
  *out = v;
  return true;
}

bool parse_index_strict(const std::string& s, std::int64_t* out) {
  if (s.empty() || s.size() > 10) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  *out = std::strtoll(s.c_str(), nullptr, 10);
  return true;
}

void format_g17(double v, std::string& out) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

SparseDataset SparseDataset::create(
    std::int64_t d, const std::vector<std::vector<Entry>>& rows,
    std::vector<double> labels) {
  if (rows.empty() || labels.size() != rows.size()) {
    throw std::invalid_argument("dataset: need n >= 1 rows with labels");
  }
  if (d < 1) {
    throw std::invalid_argument("dataset: need d >= 1");
  }
  for (double y : labels) {
    if (y != 1.0 && y != -1.0) {
      throw std::invalid_argument("dataset: labels must be -1 or +1");
    }
  }
  SparseDataset ds;
  ds.d_ = d;
  ds.labels_ = std::move(labels);
  ds.offsets_.reserve(rows.size() + 1);
  ds.offsets_.push_back(0);
  std::size_t total = 0;
  for (const auto& row : rows) total += row.size();
  ds.entries_.reserve(total);
  for (const auto& row : rows) {
    std::int64_t prev = -1;
    for (const Entry& e : row) {
      if (static_cast<std::int64_t>(e.index) <= prev) {
        throw std::invalid_argument(
            "dataset: row indices must be strictly increasing");
      }
      if (static_cast<std::int64_t>(e.index) >= d) {
        throw std::invalid_argument("dataset: feature index out of range");
      }
      prev = e.index;
      ds.entries_.push_back(e);
    }
    ds.offsets_.push_back(static_cast<std::int64_t>(ds.entries_.size()));
  }
  return ds;
}

SparseDataset SparseDataset::padded(std::int64_t d) const {
  SparseDataset copy(*this);
  copy.d_ = std::max(d_, d);
  return copy;
}

SparseDataset parse_libsvm(std::istream& in) {
  std::vector<std::vector<SparseDataset::Entry>> rows;
  std::vector<double> raw_labels;
  // Distinct raw label values with the line of first appearance.
  std::vector<std::pair<double, std::int64_t>> distinct;

  std::string line;
  std::int64_t line_no = 0;
  std::int64_t max_index = 0;  // 1-based
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;  // blank line

    double label = 0.0;
    if (!parse_double_strict(tok, &label)) {
      throw ParseError(line_no, "malformed label '" + tok + "'");
    }
    bool known = false;
    for (const auto& [v, _] : distinct) known |= (v == label);
    if (!known) {
      distinct.emplace_back(label, line_no);
      if (distinct.size() > 2) {
        throw ParseError(line_no, "more than two distinct label values");
      }
    }

    std::vector<SparseDataset::Entry> row;
    std::int64_t prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError(line_no,
                         "malformed pair '" + tok + "' (missing ':')");
      }
      std::int64_t idx = 0;
      if (!parse_index_strict(tok.substr(0, colon), &idx) || idx < 1) {
        throw ParseError(line_no, "malformed pair '" + tok +
                                      "' (index must be a positive integer)");
      }
      double value = 0.0;
      if (!parse_double_strict(tok.substr(colon + 1), &value)) {
        throw ParseError(line_no,
                         "malformed pair '" + tok + "' (bad value)");
      }
      if (idx <= prev) {
        throw ParseError(line_no, "feature indices not increasing at '" +
                                      tok + "'");
      }
      prev = idx;
      max_index = std::max(max_index, idx);
      row.push_back({static_cast<std::uint32_t>(idx - 1), value});
    }
    rows.push_back(std::move(row));
    raw_labels.push_back(label);
  }

  if (rows.empty()) {
    throw ParseError(line_no, "empty dataset (no data lines)");
  }

  // Map raw labels to {-1,+1}: smaller raw value -> -1; values already in
  // {-1,+1} pass through.
  double to_neg = -1.0, to_pos = 1.0;
  if (distinct.size() == 2) {
    const double a = distinct[0].first, b = distinct[1].first;
    if (!((a == -1.0 && b == 1.0) || (a == 1.0 && b == -1.0))) {
      to_neg = std::min(a, b);
      to_pos = std::max(a, b);
    }
  } else if (distinct[0].first != 1.0 && distinct[0].first != -1.0) {
    throw ParseError(distinct[0].second,
                     "single label value with no defined -1/+1 mapping");
  }
  for (double& y : raw_labels) {
    y = (y == to_neg) ? -1.0 : (y == to_pos ? 1.0 : y);
  }

  return SparseDataset::create(std::max<std::int64_t>(max_index, 1), rows,
                               std::move(raw_labels));
}

SparseDataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

SparseDataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  return parse_libsvm(in);
}

void serialize_libsvm(const SparseDataset& ds, std::ostream& out) {
  std::string buf;
  for (std::int64_t i = 0; i < ds.num_examples(); ++i) {
    buf.clear();
    buf += ds.label(i) > 0 ? "+1" : "-1";
    for (const auto& e : ds.row(i)) {
      buf += ' ';
      buf += std::to_string(e.index + 1);
      buf += ':';
      format_g17(e.value, buf);
    }
    buf += '\n';
    out << buf;
  }
}

std::string serialize_libsvm(const SparseDataset& ds) {
  std::ostringstream out;
  serialize_libsvm(ds, out);
  return out.str();
}

SparseDataset synth_logistic(std::int64_t n, std::int64_t d,
                             std::uint64_t seed, double separation) {
  if (n < 2 || d < 1) {
    throw std::invalid_argument("synth_logistic: need n >= 2 and d >= 1");
  }
  RngStream root(seed);
  RngStream dir = root.split(0);
  RngStream feat = root.split(1);
  RngStream noise = root.split(2);

  std::vector<double> u(d);
  for (auto& c : u) c = dir.next_gaussian();

  const double flip_prob = 0.5 * std::exp(-0.5 * separation * separation);

  std::vector<std::vector<SparseDataset::Entry>> rows(n);
  std::vector<double> labels(n);
  for (std::int64_t i = 0; i < n; ++i) {
    auto& row = rows[i];
    row.resize(d);
    double margin = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double v = feat.next_gaussian();
      row[j] = {static_cast<std::uint32_t>(j), v};
      margin += u[j] * v;
    }
    double y = margin >= 0.0 ? 1.0 : -1.0;
    if (noise.next_unit() < flip_prob) y = -y;
    labels[i] = y;
  }
  return SparseDataset::create(d, rows, std::move(labels));
}

std::vector<double> row_sq_norms(const SparseDataset& ds) {
  std::vector<double> norms(ds.num_examples());
  for (std::int64_t i = 0; i < ds.num_examples(); ++i) {
    double acc = 0.0;
    for (const auto& e : ds.row(i)) acc += e.value * e.value;
    norms[i] = acc;
  }
  return norms;
}

}  // namespace gsarah
