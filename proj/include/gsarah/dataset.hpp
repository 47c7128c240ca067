#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gsarah {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::int64_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

// Immutable sparse design matrix with +/-1 labels (CSR storage).  Row entries
// carry 0-based feature indices, strictly increasing within a row.  Safe to
// share read-only across threads.
class SparseDataset {
 public:
  struct Entry {
    std::uint32_t index;
    double value;
    bool operator==(const Entry&) const = default;
  };

  // Validates every invariant (n >= 1, d >= 1, indices < d and strictly
  // increasing, labels in {-1,+1}); throws std::invalid_argument otherwise.
  static SparseDataset create(std::int64_t d,
                              const std::vector<std::vector<Entry>>& rows,
                              std::vector<double> labels);

  std::int64_t num_examples() const {
    return static_cast<std::int64_t>(labels_.size());
  }
  std::int64_t dim() const { return d_; }

  std::span<const Entry> row(std::int64_t i) const {
    return {entries_.data() + offsets_[i],
            static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  double label(std::int64_t i) const { return labels_[i]; }
  const std::vector<double>& labels() const { return labels_; }

  // Copy with the feature dimension raised to at least `d`.
  SparseDataset padded(std::int64_t d) const;

  bool operator==(const SparseDataset&) const = default;

 private:
  SparseDataset() = default;
  std::int64_t d_ = 0;
  std::vector<std::int64_t> offsets_;
  std::vector<Entry> entries_;
  std::vector<double> labels_;
};

// LibSVM text: `<label> <idx>:<val> ...` per line, 1-based indices, optional
// `#` comment tails, blank lines skipped.  d is the largest index seen.  The
// two distinct raw label values map to -1/+1 with the numerically smaller one
// becoming -1; raw labels already in {-1,+1} pass through.  Malformed input
// raises ParseError naming the offending line.
SparseDataset parse_libsvm(std::istream& in);
SparseDataset parse_libsvm(std::string_view text);
SparseDataset parse_libsvm_file(const std::string& path);

// Inverse of parse_libsvm: 1-based indices, space separated, values printed
// with %.17g so a round trip reproduces the structure exactly.
void serialize_libsvm(const SparseDataset& ds, std::ostream& out);
std::string serialize_libsvm(const SparseDataset& ds);

// Dense Gaussian rows, labels = sign of the margin against a hidden
// direction, flipped with probability 0.5*exp(-separation^2/2).
// Deterministic in (n, d, seed, separation); requires n >= 2, d >= 1.
SparseDataset synth_logistic(std::int64_t n, std::int64_t d,
                             std::uint64_t seed, double separation);

// Exact per-row squared Euclidean norms, one left-to-right pass per row.
std::vector<double> row_sq_norms(const SparseDataset& ds);

}  // namespace gsarah
