#include "edfvae/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace edfvae {

namespace {

constexpr char kMleMagic[8] = {'E', 'D', 'F', 'M', 'L', 'E', '0', '1'};
constexpr char kModelMagic[8] = {'E', 'D', 'F', 'V', 'A', 'E', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

void write_f64(std::ostream& out, double value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t value = 0;
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) {
    throw std::runtime_error("io: truncated file");
  }
  return value;
}

double read_f64(std::istream& in) {
  double value = 0.0;
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  if (!in) {
    throw std::runtime_error("io: truncated file");
  }
  return value;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      write_f64(out, m(i, j));
    }
  }
}

Matrix read_matrix(std::istream& in) {
  const Index rows = static_cast<Index>(read_u32(in));
  const Index cols = static_cast<Index>(read_u32(in));
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = read_f64(in);
    }
  }
  return m;
}

void write_vector(std::ostream& out, const Vector& v) {
  write_u32(out, static_cast<std::uint32_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    write_f64(out, v[i]);
  }
}

Vector read_vector(std::istream& in) {
  const Index n = static_cast<Index>(read_u32(in));
  Vector v(n);
  for (Index i = 0; i < n; ++i) {
    v[i] = read_f64(in);
  }
  return v;
}

void write_family(std::ostream& out, const EdfFamily& family) {
  write_u32(out, static_cast<std::uint32_t>(family.kind));
  write_u32(out, static_cast<std::uint32_t>(family.trials_n));
  write_f64(out, family.dispersion_phi);
  write_f64(out, family.canonical_scale_rho);
}

EdfFamily read_family(std::istream& in) {
  EdfFamily family;
  family.kind = static_cast<FamilyKind>(read_u32(in));
  family.trials_n = static_cast<int>(read_u32(in));
  family.dispersion_phi = read_f64(in);
  family.canonical_scale_rho = read_f64(in);
  return family;
}

void check_magic(std::istream& in, const char (&magic)[8], const char* what) {
  char buffer[8];
  in.read(buffer, 8);
  if (!in || std::memcmp(buffer, magic, 8) != 0) {
    throw std::runtime_error(std::string("io: bad magic for ") + what);
  }
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw std::runtime_error("io: cannot open " + path + " for writing");
  }
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw std::runtime_error("io: cannot open " + path);
  }
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void save_mle_solution(const std::string& path, const MleSolution& sol) {
  std::ofstream out = open_out(path, true);
  out.write(kMleMagic, 8);
  write_family(out, sol.family);
  write_f64(out, sol.beta);
  write_f64(out, sol.cutoff);
  write_u32(out, sol.sigma2_hat.has_value() ? 1 : 0);
  write_f64(out, sol.sigma2_hat.value_or(0.0));
  write_u32(out, sol.degenerate ? 1 : 0);
  write_vector(out, sol.b_hat);
  write_matrix(out, sol.w_hat);
  write_matrix(out, sol.rotation_r);
  write_vector(out, sol.eigenvalues);
  write_u32(out, static_cast<std::uint32_t>(sol.active_mask.size()));
  for (bool active : sol.active_mask) {
    out.put(active ? 1 : 0);
  }
}

MleSolution load_mle_solution(const std::string& path) {
  std::ifstream in = open_in(path, true);
  check_magic(in, kMleMagic, "MLE solution");
  MleSolution sol;
  sol.family = read_family(in);
  sol.beta = read_f64(in);
  sol.cutoff = read_f64(in);
  const bool has_sigma2 = read_u32(in) != 0;
  const double sigma2 = read_f64(in);
  if (has_sigma2) {
    sol.sigma2_hat = sigma2;
  }
  sol.degenerate = read_u32(in) != 0;
  sol.b_hat = read_vector(in);
  sol.w_hat = read_matrix(in);
  sol.rotation_r = read_matrix(in);
  sol.eigenvalues = read_vector(in);
  const std::uint32_t mask_size = read_u32(in);
  sol.active_mask.resize(mask_size);
  for (std::uint32_t i = 0; i < mask_size; ++i) {
    const int byte = in.get();
    if (byte == EOF) {
      throw std::runtime_error("io: truncated file");
    }
    sol.active_mask[i] = byte != 0;
  }
  return sol;
}

void write_mle_csv(const std::string& path, const MleSolution& sol) {
  std::ofstream out = open_out(path, false);
  const Vector activity = activity_predict(sol);
  out << "row,b_hat,eigenvalue,predicted_activity\n";
  for (Index j = 0; j < sol.dim(); ++j) {
    out << j << ',' << format_double(sol.b_hat[j]) << ','
        << format_double(sol.eigenvalues[j]) << ',';
    if (j < sol.kappa()) {
      out << format_double(activity[j]);
    }
    out << '\n';
  }
  out << "cutoff," << format_double(sol.cutoff) << ",,\n";
  out << "beta," << format_double(sol.beta) << ",,\n";
  out << "phi," << format_double(sol.family.dispersion_phi) << ",,\n";
  if (sol.sigma2_hat.has_value()) {
    out << "sigma2," << format_double(*sol.sigma2_hat) << ",,\n";
  }
  out << "active_count," << sol.active_count() << ",,\n";
}

void save_checkpoint(const std::string& path, const VaeModel& model) {
  std::ofstream out = open_out(path, true);
  out.write(kModelMagic, 8);
  write_family(out, model.family);
  write_f64(out, model.beta);
  write_u32(out, static_cast<std::uint32_t>(model.kappa));
  write_u32(out, static_cast<std::uint32_t>(model.input_dim));
  write_u32(out, model.arch == ArchitectureKind::kDeep ? 0 : 1);
  write_u32(out, static_cast<std::uint32_t>(model.encoder_trunk.size()));
  write_u32(out, static_cast<std::uint32_t>(model.decoder.size()));
  for (const DenseLayer* layer : layer_pointers(model)) {
    write_u32(out, static_cast<std::uint32_t>(layer->act));
    write_matrix(out, layer->w);
    write_vector(out, layer->b);
  }
}

VaeModel load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path, true);
  check_magic(in, kModelMagic, "model checkpoint");
  VaeModel model;
  model.family = read_family(in);
  model.beta = read_f64(in);
  model.kappa = static_cast<Index>(read_u32(in));
  model.input_dim = static_cast<Index>(read_u32(in));
  model.arch = read_u32(in) == 0 ? ArchitectureKind::kDeep
                                 : ArchitectureKind::kCanonical;
  const std::uint32_t n_trunk = read_u32(in);
  const std::uint32_t n_dec = read_u32(in);
  model.encoder_trunk.resize(n_trunk);
  model.decoder.resize(n_dec);
  for (DenseLayer* layer : layer_pointers(model)) {
    layer->act = static_cast<Activation>(read_u32(in));
    layer->w = read_matrix(in);
    layer->b = read_vector(in);
  }
  return model;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
  std::ofstream out = open_out(path, false);
  out << "batch,split,elbo,seconds\n";
  for (const EvalRecord& rec : history.records) {
    out << rec.batch << ",train," << format_double(rec.train_elbo) << ','
        << format_double(rec.seconds) << '\n';
    out << rec.batch << ",test," << format_double(rec.test_elbo) << ','
        << format_double(rec.seconds) << '\n';
  }
}

void write_activity_csv(const std::string& path,
                        const ActivityReport& report) {
  std::ofstream out = open_out(path, false);
  out << "dim,value,source\n";
  for (Index j = 0; j < report.values.size(); ++j) {
    out << j << ',' << format_double(report.values[j]) << ','
        << to_string(report.source) << '\n';
  }
  out << "active_count," << report.active_count << ','
      << to_string(report.source) << '\n';
}

void write_histogram_csv(const std::string& path,
                         const std::array<int, kActivityBins>& histogram) {
  std::ofstream out = open_out(path, false);
  out << "bin_low,bin_high,count\n";
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    const double low = 0.1 * static_cast<double>(i);
    out << format_double(low) << ',';
    if (i + 1 < histogram.size()) {
      out << format_double(low + 0.1);
    } else {
      out << "inf";
    }
    out << ',' << histogram[i] << '\n';
  }
}

}  // namespace edfvae
