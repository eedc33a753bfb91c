#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edfvae/config.hpp"
#include "edfvae/experiments.hpp"
#include "edfvae/io.hpp"

using namespace edfvae;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("edfvae_cli_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentConfig tiny_config(const TempDir& dir) {
  ExperimentConfig config;
  config.dataset = "synthetic";
  config.synth_n = 400;
  config.synth_d = 50;
  config.synth_seed = 55;
  config.kappa = 2;
  config.beta = 1.0;
  config.seeds = {1};
  config.batch = 50;
  config.total_batches = 4;
  config.eval_every = 2;
  config.eval_mc = 2;
  config.hidden_scale = 0.02;
  config.output_dir = dir.file("out");
  config.emit_svg = true;
  return config;
}

}  // namespace

TEST_CASE("config round-trips through its serialization") {
  ExperimentConfig config;
  config.dataset = "some/path.csv";
  config.family = "gaussian";
  config.phi = 0.5;
  config.kappa = 7;
  config.beta = 2.5;
  config.betas = {1.0, 20.0};
  config.seeds = {3, 1, 4};
  config.init = "mle_b";
  config.hidden_scale = 0.25;
  config.limit_rows = 5000;
  const ExperimentConfig reparsed = parse_config_text(serialize_config(config));
  CHECK(serialize_config(reparsed) == serialize_config(config));
  CHECK(reparsed.seeds == config.seeds);
  CHECK(reparsed.betas == config.betas);
  CHECK(reparsed.phi == config.phi);
}

TEST_CASE("config parser accepts comments and rejects junk") {
  const ExperimentConfig config = parse_config_text(
      "# comment line\n"
      "kappa = 3   # trailing comment\n"
      "\n"
      "seeds = 1, 2, 3\n");
  CHECK(config.kappa == 3);
  CHECK(config.seeds.size() == 3);

  CHECK_THROWS_AS(parse_config_text("kappa 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("unknown_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("kappa = -2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("init = fancy\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("lr = zero\n"), ConfigError);
}

TEST_CASE("cmd_synth writes loadable splits") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  cmd_synth(config);
  const Matrix train =
      load_csv(dir.file("out") + "/synthetic_train.csv", false);
  const Matrix test = load_csv(dir.file("out") + "/synthetic_test.csv", false);
  CHECK(train.rows() == 268);  // ceil(0.67 * 400)
  CHECK(test.rows() == 132);
  CHECK(train.cols() == 50);
}

TEST_CASE("cmd_mle outputs and determinism") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  cmd_mle(config);
  const std::string csv_first = slurp(dir.file("out") + "/mle.csv");
  const std::string bin_first = slurp(dir.file("out") + "/mle.bin");
  const std::string lhat_first = slurp(dir.file("out") + "/lhat.txt");
  CHECK(csv_first.find("cutoff,4") != std::string::npos);
  CHECK(lhat_first.find("objective_hat") != std::string::npos);

  cmd_mle(config);
  CHECK(slurp(dir.file("out") + "/mle.csv") == csv_first);
  CHECK(slurp(dir.file("out") + "/mle.bin") == bin_first);
  CHECK(slurp(dir.file("out") + "/lhat.txt") == lhat_first);

  const MleSolution sol = load_mle_solution(dir.file("out") + "/mle.bin");
  CHECK(sol.kappa() == 2);
  CHECK(sol.beta == 1.0);
}

TEST_CASE("cmd_mle prunes everything at extreme beta") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.beta = 1e6;
  cmd_mle(config);
  const MleSolution sol = load_mle_solution(dir.file("out") + "/mle.bin");
  CHECK(sol.active_count() == 0);
  CHECK(sol.w_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cmd_mle surfaces the Gaussian dispersion precondition") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.family = "gaussian";
  config.allow_raw = true;
  config.beta = 30.0;  // >= d / kappa = 25
  CHECK_THROWS_WITH_AS(cmd_mle(config),
                       doctest::Contains("sigma estimator undefined"),
                       NumericError);
}

TEST_CASE("cmd_train writes per-seed histories and a byte-stable aggregate") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.seeds = {1, 2};
  cmd_train(config);
  CHECK(fs::exists(dir.file("out") + "/history_seed1.csv"));
  CHECK(fs::exists(dir.file("out") + "/history_seed2.csv"));
  CHECK(fs::exists(dir.file("out") + "/curves.svg"));
  const std::string aggregate = slurp(dir.file("out") + "/aggregate.csv");
  CHECK(aggregate.find("batch,split,mean_elbo,ci_low,ci_high") !=
        std::string::npos);

  const std::string history = slurp(dir.file("out") + "/history_seed1.csv");
  CHECK(history.find("batch,split,elbo,seconds") != std::string::npos);

  cmd_train(config);
  CHECK(slurp(dir.file("out") + "/aggregate.csv") == aggregate);
}

TEST_CASE("cmd_train with zero batches records only the initial point") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.total_batches = 0;
  cmd_train(config);
  const std::string history = slurp(dir.file("out") + "/history_seed1.csv");
  // Header plus one record (train and test line).
  CHECK(std::count(history.begin(), history.end(), '\n') == 3);
}

TEST_CASE("cmd_activity emits reports and distances") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.betas = {20.0};
  config.seeds = {1, 2};
  config.total_batches = 2;
  cmd_activity(config);
  CHECK(fs::exists(dir.file("out") + "/activity_beta20_analytical.csv"));
  CHECK(fs::exists(dir.file("out") + "/activity_beta20_seed1_empirical.csv"));
  CHECK(fs::exists(dir.file("out") + "/histogram_beta20_analytical.csv"));
  const std::string distances = slurp(dir.file("out") + "/distance.csv");
  CHECK(distances.find("beta,mean_distance,std_distance") !=
        std::string::npos);
  CHECK(distances.find("20,") != std::string::npos);
}

TEST_CASE("cmd_init_export writes a checkpoint seeded with the MLE") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  cmd_init_export(config);
  const MleSolution sol = load_mle_solution(dir.file("out") + "/mle.bin");
  const VaeModel model =
      load_checkpoint(dir.file("out") + "/mle_b_init.bin");
  CHECK((model.decoder.back().w - sol.w_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((model.decoder.back().b - sol.b_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("checkpoints round-trip every parameter") {
  TempDir dir;
  VaeModel model = build_architecture(ArchitectureKind::kDeep, 12, 3,
                                      EdfFamily::gaussian(0.7), 0.01, 2.0);
  Rng rng(33);
  init_bench(model, rng);
  const std::string path = dir.file("model.bin");
  save_checkpoint(path, model);
  const VaeModel loaded = load_checkpoint(path);
  CHECK(loaded.beta == model.beta);
  CHECK(loaded.kappa == model.kappa);
  CHECK(loaded.arch == model.arch);
  CHECK(loaded.family.kind == model.family.kind);
  CHECK(loaded.family.dispersion_phi == model.family.dispersion_phi);
  const auto original = layer_pointers(model);
  VaeModel loaded_mut = loaded;
  const auto restored = layer_pointers(loaded_mut);
  REQUIRE(original.size() == restored.size());
  for (std::size_t l = 0; l < original.size(); ++l) {
    CHECK((original[l]->w - restored[l]->w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((original[l]->b - restored[l]->b).cwiseAbs().maxCoeff() == 0.0);
    CHECK(original[l]->act == restored[l]->act);
  }
}

TEST_CASE("mle solutions round-trip through the binary container") {
  const Dataset data = synthetic_bernoulli(300, 45, 21);
  const MleSolution sol = mle_fit(data.train, EdfFamily::bernoulli(), 1.0, 3);
  TempDir dir;
  const std::string path = dir.file("sol.bin");
  save_mle_solution(path, sol);
  const MleSolution loaded = load_mle_solution(path);
  CHECK((loaded.b_hat - sol.b_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.w_hat - sol.w_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.eigenvalues - sol.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.cutoff == sol.cutoff);
  CHECK(loaded.active_mask == sol.active_mask);
  CHECK(loaded.family.kind == sol.family.kind);
  CHECK(loaded.sigma2_hat.has_value() == sol.sigma2_hat.has_value());
}

TEST_CASE("EDFVAE_OUTPUT_ROOT prefixes the output directory") {
  TempDir dir;
  ExperimentConfig config = tiny_config(dir);
  config.output_dir = "nested/out";
  setenv("EDFVAE_OUTPUT_ROOT", dir.path.c_str(), 1);
  cmd_synth(config);
  unsetenv("EDFVAE_OUTPUT_ROOT");
  CHECK(fs::exists(dir.path / "nested/out/synthetic_train.csv"));
}

TEST_CASE("csv datasets load with explicit test files") {
  TempDir dir;
  {
    std::ofstream train(dir.file("train.csv"));
    train << "0,1,0\n1,0,1\n0,0,1\n";
    std::ofstream test(dir.file("test.csv"));
    test << "1,1,0\n";
  }
  ExperimentConfig config;
  config.dataset = dir.file("train.csv");
  config.dataset_test = dir.file("test.csv");
  const Dataset data = load_dataset(config);
  CHECK(data.train.rows() == 3);
  CHECK(data.test.rows() == 1);
  CHECK(data.name == "train");

  ExperimentConfig missing;
  missing.dataset = dir.file("absent.csv");
  CHECK_THROWS_AS(load_dataset(missing), ConfigError);
}

TEST_CASE("limit_rows truncates before splitting") {
  TempDir dir;
  {
    std::ofstream out(dir.file("big.csv"));
    for (int i = 0; i < 10; ++i) {
      out << "0,1\n";
    }
  }
  ExperimentConfig config;
  config.dataset = dir.file("big.csv");
  config.limit_rows = 6;
  config.split_fraction = 0.5;
  const Dataset data = load_dataset(config);
  CHECK(data.train.rows() == 3);
  CHECK(data.test.rows() == 3);
}
