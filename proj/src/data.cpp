#include "edfvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace edfvae {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::uint32_t read_be_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) {
    throw std::runtime_error("idx: truncated header");
  }
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) |
         static_cast<std::uint32_t>(bytes[3]);
}

void write_be_u32(std::ostream& out, std::uint32_t value) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>((value >> 24) & 0xff),
      static_cast<unsigned char>((value >> 16) & 0xff),
      static_cast<unsigned char>((value >> 8) & 0xff),
      static_cast<unsigned char>(value & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

Dataset split_rows(const Matrix& data, double fraction,
                   const std::string& name) {
  if (fraction <= 0.0 || fraction > 1.0) {
    throw std::invalid_argument("split_rows: fraction must be in (0, 1]");
  }
  const Index n = data.rows();
  const Index n_train = std::min<Index>(
      n, static_cast<Index>(std::ceil(fraction * static_cast<double>(n))));
  Dataset out;
  out.name = name;
  out.train = data.topRows(n_train);
  out.test = data.bottomRows(n - n_train);
  return out;
}

Dataset synthetic_bernoulli(Index n, Index d, std::uint64_t seed) {
  if (n < 2) {
    throw std::invalid_argument("synthetic_bernoulli: need n >= 2");
  }
  if (d < 40) {
    throw std::invalid_argument(
        "synthetic_bernoulli: need d >= 40 for the loading pattern");
  }
  Rng rng(seed);

  Matrix a(n, 2);
  for (Index i = 0; i < n; ++i) {
    a(i, 0) = 0.3 * rng.normal();  // variance 0.09
    a(i, 1) = 0.5 * rng.normal();  // variance 0.25
  }

  Matrix b = Matrix::Zero(d, 2);
  for (Index j = 0; j < 20; ++j) {
    b(j, 0) = 1.0;
  }
  for (Index j = 20; j < 40; ++j) {
    b(j, 1) = 1.0;
  }

  const Matrix xi = a * b.transpose();
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      x(i, j) = rng.bernoulli(sigmoid(xi(i, j))) ? 1.0 : 0.0;
    }
  }
  return split_rows(x, 0.67, "synthetic");
}

Dataset synthetic_bernoulli(std::uint64_t seed) {
  return synthetic_bernoulli(10000, 200, seed);
}

Matrix load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("idx: cannot open " + path);
  }
  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  if (!in || magic[0] != 0x00 || magic[1] != 0x00 || magic[2] != 0x08) {
    throw std::runtime_error("idx: bad magic in " + path);
  }
  const int ndim = magic[3];
  if (ndim < 1 || ndim > 3) {
    throw std::runtime_error("idx: unsupported dimension count");
  }
  std::vector<std::uint64_t> dims(static_cast<std::size_t>(ndim));
  for (auto& dim : dims) {
    dim = read_be_u32(in);
  }
  const std::uint64_t n = dims[0];
  std::uint64_t per_item = 1;
  for (std::size_t k = 1; k < dims.size(); ++k) {
    per_item *= dims[k];
  }
  std::vector<unsigned char> payload(n * per_item);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != payload.size()) {
    throw std::runtime_error("idx: truncated payload in " + path);
  }

  Matrix out(static_cast<Index>(n), static_cast<Index>(per_item));
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < per_item; ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) =
          static_cast<double>(payload[i * per_item + j]) / 255.0;
    }
  }
  return out;
}

void write_idx(const std::string& path, const Matrix& data, Index rows,
               Index cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("idx: cannot open " + path + " for writing");
  }
  const bool three_d = cols > 0;
  if (three_d && rows * cols != data.cols()) {
    throw std::invalid_argument("write_idx: image shape mismatch");
  }
  const unsigned char magic[4] = {0x00, 0x00, 0x08,
                                  static_cast<unsigned char>(three_d ? 3 : 2)};
  out.write(reinterpret_cast<const char*>(magic), 4);
  write_be_u32(out, static_cast<std::uint32_t>(data.rows()));
  if (three_d) {
    write_be_u32(out, static_cast<std::uint32_t>(rows));
    write_be_u32(out, static_cast<std::uint32_t>(cols));
  } else {
    write_be_u32(out, static_cast<std::uint32_t>(data.cols()));
  }
  std::vector<unsigned char> payload(
      static_cast<std::size_t>(data.rows() * data.cols()));
  std::size_t pos = 0;
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      const double value = std::clamp(data(i, j), 0.0, 1.0);
      payload[pos++] = static_cast<unsigned char>(std::lround(value * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
}

Matrix load_csv(const std::string& path, bool has_header, bool allow_raw) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (first && has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t consumed = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &consumed);
      } catch (const std::exception&) {
        throw std::runtime_error("csv: non-numeric cell '" + cell + "'");
      }
      if (consumed != cell.size() && cell.find_first_not_of(" \t", consumed) !=
                                         std::string::npos) {
        throw std::runtime_error("csv: non-numeric cell '" + cell + "'");
      }
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("csv: ragged rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::runtime_error("csv: no data rows in " + path);
  }
  Matrix out(static_cast<Index>(rows.size()),
             static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) {
      const double value = rows[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(j)];
      if (!allow_raw && (value < 0.0 || value > 1.0)) {
        throw std::runtime_error(
            "csv: value outside [0, 1]; pass allow_raw to accept");
      }
      out(i, j) = value;
    }
  }
  return out;
}

void save_csv(const std::string& path, const Matrix& data) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot open " + path + " for writing");
  }
  char buffer[64];
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", data(i, j));
      out << buffer;
      if (j + 1 < data.cols()) {
        out << ',';
      }
    }
    out << '\n';
  }
}

}  // namespace edfvae
