#include "mopup/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mopup/error.hpp"

namespace mopup {

namespace {

// Yields non-comment, non-blank lines with their 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  }

  std::size_t number() const { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_value(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(tok) + "'", line);
  return v;
}

long long parse_count(std::string_view tok, std::size_t line, const char* what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(tok) + "'", line);
  }
  if (v < 1) throw ParseError(std::string(what) + " must be positive, got " + std::to_string(v), line);
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MatrixSampleSet read_matrix_set(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("empty input, expected MST1 header", reader.number());
  const auto head = tokenize(line);
  if (head.size() != 4 || head[0] != "MST1") throw ParseError("expected header 'MST1 n p1 p2'", reader.number());
  const long long n = parse_count(head[1], reader.number(), "n");
  const long long p1 = parse_count(head[2], reader.number(), "p1");
  const long long p2 = parse_count(head[3], reader.number(), "p2");

  std::vector<Matrix> samples;
  samples.reserve(static_cast<std::size_t>(n));
  const long long expected_rows = n * p1;
  long long rows_read = 0;
  for (long long i = 0; i < n; ++i) {
    Matrix x(p1, p2);
    for (long long r = 0; r < p1; ++r) {
      if (!reader.next(line)) {
        throw ParseError("truncated input: expected " + std::to_string(expected_rows) + " data rows, found " +
                             std::to_string(rows_read),
                         reader.number());
      }
      const auto toks = tokenize(line);
      if (static_cast<long long>(toks.size()) != p2) {
        throw ParseError("expected " + std::to_string(p2) + " values, found " + std::to_string(toks.size()),
                         reader.number());
      }
      for (long long c = 0; c < p2; ++c) x(r, c) = parse_value(toks[static_cast<std::size_t>(c)], reader.number());
      ++rows_read;
    }
    samples.push_back(std::move(x));
  }
  if (reader.next(line)) {
    throw ParseError("unexpected data after " + std::to_string(expected_rows) + " rows", reader.number());
  }
  return MatrixSampleSet::from_samples(std::move(samples));
}

MatrixSampleSet read_matrix_set(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_matrix_set(in);
}

void write_matrix_set(std::ostream& out, const MatrixSampleSet& set) {
  out << "MST1 " << set.n() << ' ' << set.p1() << ' ' << set.p2() << '\n';
  for (std::size_t i = 0; i < set.n(); ++i) {
    out << "# sample " << i << '\n';
    const Matrix& x = set.samples[i];
    for (Index r = 0; r < x.rows(); ++r) {
      for (Index c = 0; c < x.cols(); ++c) {
        if (c) out << ' ';
        out << format_double(x(r, c));
      }
      out << '\n';
    }
  }
}

void write_matrix_set(const std::filesystem::path& path, const MatrixSampleSet& set) {
  auto out = open_out(path);
  write_matrix_set(out, set);
  finish(out, path);
}

TensorSampleSet read_tensor_set(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("empty input, expected TST1 header", reader.number());
  const auto head = tokenize(line);
  if (head.size() < 3 || head[0] != "TST1") throw ParseError("expected header 'TST1 n d p1 ... pd'", reader.number());
  const long long n = parse_count(head[1], reader.number(), "n");
  const long long d = parse_count(head[2], reader.number(), "d");
  if (d < 2) throw ParseError("tensor order d must be at least 2", reader.number());
  if (static_cast<long long>(head.size()) != 3 + d) {
    throw ParseError("header lists " + std::to_string(head.size() - 3) + " dimensions, d = " + std::to_string(d),
                     reader.number());
  }
  std::vector<Index> dims;
  long long block = 1;
  for (long long k = 0; k < d; ++k) {
    dims.push_back(parse_count(head[static_cast<std::size_t>(3 + k)], reader.number(), "dimension"));
    block *= dims.back();
  }

  std::vector<Tensor> samples;
  for (long long i = 0; i < n; ++i) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(block));
    while (static_cast<long long>(values.size()) < block) {
      if (!reader.next(line)) {
        throw ParseError("truncated input: sample " + std::to_string(i) + " expected " + std::to_string(block) +
                             " values, found " + std::to_string(values.size()),
                         reader.number());
      }
      const auto toks = tokenize(line);
      if (static_cast<long long>(values.size() + toks.size()) > block) {
        throw ParseError("line runs past the end of sample " + std::to_string(i), reader.number());
      }
      for (auto tok : toks) values.push_back(parse_value(tok, reader.number()));
    }
    samples.emplace_back(dims, std::move(values));
  }
  if (reader.next(line)) throw ParseError("unexpected data after the last sample", reader.number());
  return TensorSampleSet::from_samples(std::move(samples));
}

TensorSampleSet read_tensor_set(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tensor_set(in);
}

void write_tensor_set(std::ostream& out, const TensorSampleSet& set) {
  out << "TST1 " << set.n() << ' ' << set.order();
  for (Index p : set.dims()) out << ' ' << p;
  out << '\n';
  for (std::size_t i = 0; i < set.n(); ++i) {
    out << "# sample " << i << '\n';
    const auto data = set.samples[i].data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      out << format_double(data[j]);
      out << ((j % 8 == 7 || j + 1 == data.size()) ? '\n' : ' ');
    }
  }
}

void write_tensor_set(const std::filesystem::path& path, const TensorSampleSet& set) {
  auto out = open_out(path);
  write_tensor_set(out, set);
  finish(out, path);
}

Subspace read_subspace(const std::filesystem::path& path) {
  const MatrixSampleSet set = read_matrix_set(path);
  if (set.n() != 1) throw ParseError("subspace file must hold exactly one matrix", 1);
  try {
    return Subspace(set.samples.front());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("subspace basis rejected: ") + e.what(), 0);
  }
}

void write_subspace(const std::filesystem::path& path, const Subspace& s) {
  write_matrix_set(path, MatrixSampleSet::from_samples({s.basis()}));
}

}  // namespace mopup
