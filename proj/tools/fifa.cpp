#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fifa/error.hpp"
#include "fifa/pipeline.hpp"
#include "fifa/planted.hpp"
#include "fifa/service.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string bind = "127.0.0.1:8080";
  std::string task = "classification";
  std::size_t inliers = 800;
  std::size_t outliers = 200;
  std::size_t dims = 10;
  std::size_t fold = 1;
};

fifa::Pipeline open_pipeline(const Options& o) {
  auto config = fifa::load_config(o.config);
  if (!o.out.empty()) config.output = o.out;
  if (o.seed) config.seed = *o.seed;
  return fifa::Pipeline(std::move(config));
}

void print_summary(const fifa::RunReport& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  const auto& s = report.document.at("summary");
  std::cout << "config " << report.document.at("config_hash").get<std::string>() << ", runs " << s.at("runs");
  if (s.contains("mean_failure_modes")) std::cout << ", failure modes/run " << s.at("mean_failure_modes");
  if (s.contains("mean_base_accuracy")) {
    std::cout << ", accuracy " << s.at("mean_base_accuracy").get<double>() << " -> "
              << s.at("mean_corrected_accuracy").get<double>();
  }
  std::cout << '\n';
}

int generate(const Options& o) {
  fifa::PlantedSpec spec;
  spec.seed = o.seed.value_or(spec.seed);
  spec.inliers = o.inliers;
  spec.outliers = o.outliers;
  spec.dims = o.dims;
  spec.task = fifa::parse_task_kind(o.task);
  const auto d = fifa::generate_planted(spec);
  if (o.out.empty() || o.out == "-") {
    fifa::write_dataset_csv(std::cout, d);
    return 0;
  }
  std::ofstream out(o.out);
  if (!out) throw fifa::InputError("cannot write '" + o.out + "'");
  fifa::write_dataset_csv(out, d);
  std::cerr << "wrote " << d.rows() << " rows to " << o.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Failure-mode analysis of model predictions with Mapper graphs"};
  app.require_subcommand(1);
  Options o;

  const auto with_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", o.seed, "Random seed (overrides the config)");
    return cmd;
  };
  auto* run = with_config(app.add_subcommand("run", "Run every stage and write the report"));
  auto* build = with_config(app.add_subcommand("build-graph", "Compute filters and the Mapper graph"));
  auto* extract = with_config(app.add_subcommand("extract", "Partition the graph and select failure modes"));
  auto* train = with_config(app.add_subcommand("train", "Train the correction ensemble"));
  auto* evaluate = with_config(app.add_subcommand("evaluate", "Evaluate the ensemble on held-out rows"));
  auto* diagnose = with_config(app.add_subcommand("diagnose", "Rank features by KS statistic per mode"));
  auto* serve = with_config(app.add_subcommand("serve", "Serve artifacts over HTTP"));
  serve->add_option("--bind", o.bind, "host:port")->capture_default_str();
  serve->add_option("--fold", o.fold, "Fold to serve when the config uses k-fold evaluation")->capture_default_str();

  auto* gen = app.add_subcommand("generate", "Write a planted-failure dataset as CSV");
  gen->add_option("--out", o.out, "Output CSV path ('-' for stdout)");
  gen->add_option("--seed", o.seed, "Random seed");
  gen->add_option("--task", o.task, "classification or regression")->capture_default_str();
  gen->add_option("--inliers", o.inliers)->capture_default_str();
  gen->add_option("--outliers", o.outliers)->capture_default_str();
  gen->add_option("--dims", o.dims)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return generate(o);
    auto pipeline = open_pipeline(o);
    if (serve->parsed()) {
      const auto& spaces = pipeline.workspaces();
      if (o.fold < 1 || o.fold > spaces.size()) throw fifa::ArgumentError("--fold must lie in 1.." + std::to_string(spaces.size()));
      fifa::Service service(pipeline, spaces[o.fold - 1].dir);
      std::cerr << "serving " << service.dir().string() << " on " << o.bind << '\n';
      fifa::serve(service, o.bind);
      return 0;
    }
    if (run->parsed()) {
      print_summary(pipeline.run());
      return 0;
    }
    if (build->parsed()) pipeline.build_graph();
    if (extract->parsed()) pipeline.extract();
    if (train->parsed()) pipeline.train();
    if (evaluate->parsed()) pipeline.evaluate();
    if (diagnose->parsed()) pipeline.diagnose();
    print_summary(pipeline.report());
    return 0;
  } catch (const fifa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fifa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
