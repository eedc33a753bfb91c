#pragma once

#include <cstdint>
#include <string>

#include "edfvae/rng.hpp"
#include "edfvae/types.hpp"

namespace edfvae {

struct Dataset {
  Matrix train;
  Matrix test;
  std::string name;
};

/// Sparse two-factor Bernoulli data: principal components a1 ~ N(0, 0.09)
/// and a2 ~ N(0, 0.25), loading vectors with ones on rows 1..20 and 21..40,
/// pixel probabilities sigmoid(A B^T), rows split 67% train / 33% test in
/// generation order.
Dataset synthetic_bernoulli(Index n, Index d, std::uint64_t seed);
Dataset synthetic_bernoulli(std::uint64_t seed);  // n = 10000, d = 200

/// IDX file of unsigned bytes (magic 0x00 0x00 0x08 <ndim>); images are
/// flattened row-major and scaled by 1/255 into [0, 1].
Matrix load_idx(const std::string& path);

/// Writes a matrix of [0, 1] values as an IDX tensor (values scaled by 255
/// and rounded).  `rows`/`cols` give the per-image shape for 3-d files; pass
/// cols = 0 for a 2-d file.
void write_idx(const std::string& path, const Matrix& data, Index rows,
               Index cols);

/// Rectangular numeric CSV.  Values are required to lie in [0, 1] unless
/// `allow_raw` is set.
Matrix load_csv(const std::string& path, bool has_header,
                bool allow_raw = false);

void save_csv(const std::string& path, const Matrix& data);

/// First ceil(fraction * N) rows train, remainder test.
Dataset split_rows(const Matrix& data, double fraction,
                   const std::string& name);

}  // namespace edfvae
