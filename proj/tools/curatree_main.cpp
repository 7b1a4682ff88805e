// curatree: build hierarchical k-means trees over embedding collections,
// draw balance-controlled subsets, plan cluster-stratified training batches
// and export the diagnostics used to analyze them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "curatree/diagnostics.hpp"
#include "curatree/embeddings.hpp"
#include "curatree/error.hpp"
#include "curatree/hierarchy.hpp"
#include "curatree/kmeans.hpp"
#include "curatree/manifest.hpp"
#include "curatree/sampler.hpp"
#include "curatree/stratifier.hpp"
#include "curatree/version.hpp"

namespace ct = curatree;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ct::RunManifest make_manifest(const std::string& command, const json& config,
                              const std::vector<std::string>& inputs, uint64_t seed,
                              const Stopwatch& watch) {
  ct::RunManifest m;
  m.command = command;
  m.config_json = config.dump();
  for (const auto& path : inputs) {
    m.input_digests[path] = ct::digest_hex(ct::file_digest64(path));
  }
  m.seed = seed;
  m.tool_version = ct::kVersion;
  m.wall_time_seconds = watch.seconds();
  return m;
}

std::vector<int64_t> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) ct::fail(ct::errc::not_found, "cannot open label file: " + path);
  std::vector<int64_t> labels;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      size_t used = 0;
      labels.push_back(std::stoll(line, &used));
      if (used != line.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      ct::fail(ct::errc::malformed_record,
               "label file " + path + " line " + std::to_string(line_no) + " is not an integer");
    }
  }
  return labels;
}

void emit_csv(const std::string& csv, const std::string& out_path, const ct::RunManifest& manifest) {
  if (out_path.empty()) {
    std::cout << csv;
    return;
  }
  std::ofstream out(out_path);
  if (!out) ct::fail(ct::errc::io_error, "cannot open output: " + out_path);
  out << csv;
  out.close();
  ct::write_manifest(out_path, manifest);
}

ct::Seeding parse_seeding(const std::string& name) {
  if (name == "plus_plus") return ct::Seeding::plus_plus;
  if (name == "random_rows") return ct::Seeding::random_rows;
  ct::fail(ct::errc::invalid_config, "unknown seeding '" + name + "'");
}

struct GenArgs {
  std::string out;
  std::string labels_out;
  uint64_t count = 10000;
  uint32_t dim = 16;
  uint32_t components = 20;
  double tail_exponent = 1.2;
  uint64_t seed = 0;
};

int cmd_gen(const GenArgs& a) {
  Stopwatch watch;
  const auto data =
      ct::generate_heavy_tailed(a.count, a.dim, a.components, a.tail_exponent, a.seed);
  ct::save_embeddings(a.out, data.matrix);

  const json config{{"count", a.count}, {"dim", a.dim},  {"components", a.components},
                    {"tail_exponent", a.tail_exponent}, {"out", a.out}};
  ct::write_manifest(a.out, make_manifest("gen", config, {}, a.seed, watch));

  if (!a.labels_out.empty()) {
    std::ofstream lout(a.labels_out);
    if (!lout) ct::fail(ct::errc::io_error, "cannot open labels output: " + a.labels_out);
    for (uint32_t label : data.labels) lout << label << '\n';
    lout.close();
    ct::write_manifest(a.labels_out, make_manifest("gen", config, {}, a.seed, watch));
  }
  std::cout << "generated=" << a.count << " dim=" << a.dim << " components=" << a.components
            << " out=" << a.out << "\n";
  return 0;
}

struct BuildTreeArgs {
  std::string embeddings;
  std::string out;
  std::vector<uint32_t> levels;
  bool normalize = true;
  uint64_t seed = 0;
  std::string seeding = "plus_plus";
  uint32_t max_iters = 50;
  double tol = -1.0;  // <0 means auto
};

int cmd_build_tree(const BuildTreeArgs& a) {
  Stopwatch watch;
  ct::TreeConfig config;
  config.level_counts = a.levels;
  config.kmeans.max_iters = a.max_iters;
  if (a.tol >= 0.0) config.kmeans.tol = a.tol;
  config.kmeans.seed = a.seed;
  config.kmeans.seeding = parse_seeding(a.seeding);

  const auto data = ct::load_embeddings(a.embeddings, a.normalize);
  ct::validate_tree_config(config, data.count);
  const ct::ClusterTree tree = ct::build_tree(data, config);
  ct::save_tree(tree, a.out);

  json levels_json = json::array();
  for (uint32_t l = 1; l <= tree.depth(); ++l) {
    const auto& lev = tree.level(l);
    double mean = 0.0;
    for (uint64_t s : lev.sizes) mean += static_cast<double>(s);
    mean /= static_cast<double>(lev.cluster_count);
    double var = 0.0;
    uint64_t min_s = lev.sizes[0];
    uint64_t max_s = lev.sizes[0];
    for (uint64_t s : lev.sizes) {
      const double d = static_cast<double>(s) - mean;
      var += d * d;
      min_s = std::min(min_s, s);
      max_s = std::max(max_s, s);
    }
    const double cv = std::sqrt(var / static_cast<double>(lev.cluster_count)) / mean;
    std::cout << "level=" << l << " clusters=" << lev.cluster_count << " size_min=" << min_s
              << " size_max=" << max_s << " size_mean=" << ct::format_sig12(mean)
              << " size_cv=" << ct::format_sig12(cv) << "\n";
    levels_json.push_back(lev.cluster_count);
  }

  const json config_json{{"embeddings", a.embeddings}, {"levels", levels_json},
                         {"normalize", a.normalize},   {"seeding", a.seeding},
                         {"max_iters", a.max_iters},   {"tol", a.tol < 0 ? json() : json(a.tol)},
                         {"out", a.out}};
  ct::write_manifest(a.out, make_manifest("build-tree", config_json, {a.embeddings}, a.seed, watch));
  return 0;
}

struct SampleArgs {
  std::string tree;
  std::string out;
  uint32_t level = 0;
  std::optional<double> fraction;
  std::optional<uint64_t> size;
  bool exact = false;
  uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a) {
  Stopwatch watch;
  const ct::ClusterTree tree = ct::load_tree(a.tree);
  const ct::SubsetTarget target = a.fraction ? ct::SubsetTarget::fraction(*a.fraction)
                                             : ct::SubsetTarget::size(*a.size);
  const ct::CuratedSubset subset = ct::sample_subset(tree, a.level, target, a.seed, a.exact);
  ct::subset_save(subset, a.out);

  std::cout << "target=" << subset.target << " achieved=" << subset.achieved
            << " tv=" << ct::format_sig12(ct::realized_tv(tree, subset, a.level)) << "\n";

  const json config{{"tree", a.tree},
                    {"level", a.level},
                    {"fraction", a.fraction ? json(*a.fraction) : json()},
                    {"size", a.size ? json(*a.size) : json()},
                    {"exact", a.exact},
                    {"out", a.out}};
  ct::write_manifest(a.out, make_manifest("sample", config, {a.tree}, a.seed, watch));
  return 0;
}

struct BatchesArgs {
  std::string tree;
  std::string subset;
  std::string out;
  std::string ledger_out;
  uint32_t batch_size = 0;
  uint64_t num_batches = 0;
  std::string mode = "stratified";
  uint64_t seed = 0;
};

int cmd_batches(const BatchesArgs& a) {
  Stopwatch watch;
  const ct::ClusterTree tree = ct::load_tree(a.tree);
  const ct::CuratedSubset subset = ct::subset_load(a.subset, tree.count());

  const json config{{"tree", a.tree},           {"subset", a.subset},
                    {"batch_size", a.batch_size}, {"num_batches", a.num_batches},
                    {"mode", a.mode},           {"out", a.out},
                    {"ledger_out", a.ledger_out.empty() ? json() : json(a.ledger_out)}};

  if (a.mode == "stratified") {
    auto result = ct::plan_stratified(subset, tree, a.batch_size, a.num_batches, a.seed);
    for (const auto& d : result.plan.deficits) {
      std::cerr << "warning=deficit batch=" << d.batch << " cluster=" << d.cluster_id
                << " requested=" << d.requested << " taken=" << d.taken << "\n";
    }
    ct::save_batch_plan(result.plan, a.out);
    ct::write_manifest(a.out, make_manifest("batches", config, {a.tree, a.subset}, a.seed, watch));
    if (!a.ledger_out.empty()) {
      ct::ledger_save(result.ledger, a.ledger_out);
      ct::write_manifest(a.ledger_out,
                         make_manifest("batches", config, {a.tree, a.subset}, a.seed, watch));
    }
    const auto summary = ct::ledger_report(result.ledger);
    uint64_t qmin = UINT64_MAX;
    uint64_t qmax = 0;
    if (!result.plan.composition.empty()) {
      for (const auto& [cid, cnt] : result.plan.composition.front()) {
        qmin = std::min(qmin, cnt);
        qmax = std::max(qmax, cnt);
      }
    }
    std::cout << "mode=stratified batches=" << result.plan.batches.size()
              << " batch_size=" << a.batch_size << " clusters=" << summary.per_cluster.size()
              << " first_batch_quota_min=" << qmin << " first_batch_quota_max=" << qmax
              << " coverage=" << ct::format_sig12(summary.coverage)
              << " multiplicity=" << summary.multiplicity
              << " deficit_events=" << result.plan.deficits.size() << "\n";
  } else if (a.mode == "random") {
    const auto plan = ct::plan_random(subset, tree, a.batch_size, a.num_batches, a.seed);
    ct::save_batch_plan(plan, a.out);
    ct::write_manifest(a.out, make_manifest("batches", config, {a.tree, a.subset}, a.seed, watch));
    std::cout << "mode=random batches=" << plan.batches.size() << " batch_size=" << a.batch_size
              << "\n";
  } else {
    ct::fail(ct::errc::invalid_config, "unknown mode '" + a.mode + "'");
  }
  return 0;
}

struct TvCurveArgs {
  std::string tree;
  std::string out;
  uint32_t sampling_level = 0;
  uint32_t measure_level = 0;
  std::vector<double> fractions;
  uint64_t seed = 0;
};

int cmd_stats_tv_curve(const TvCurveArgs& a) {
  Stopwatch watch;
  const ct::ClusterTree tree = ct::load_tree(a.tree);
  const ct::TvCurve curve =
      ct::tv_curve(tree, a.sampling_level, a.measure_level, a.fractions, a.seed);
  const json config{{"tree", a.tree},
                    {"sampling_level", a.sampling_level},
                    {"measure_level", a.measure_level},
                    {"fractions", a.fractions},
                    {"out", a.out.empty() ? json() : json(a.out)}};
  emit_csv(ct::tv_curve_csv(curve), a.out,
           make_manifest("stats tv-curve", config, {a.tree}, a.seed, watch));
  return 0;
}

struct AriArgs {
  std::string labels_a;
  std::string labels_b;
  std::string out;
};

int cmd_stats_ari(const AriArgs& a) {
  Stopwatch watch;
  const auto la = read_label_file(a.labels_a);
  const auto lb = read_label_file(a.labels_b);
  const double ari = ct::adjusted_rand_index(la, lb);
  const json config{{"labels_a", a.labels_a}, {"labels_b", a.labels_b},
                    {"out", a.out.empty() ? json() : json(a.out)}};
  emit_csv("ari\n" + ct::format_sig12(ari) + "\n", a.out,
           make_manifest("stats ari", config, {a.labels_a, a.labels_b}, 0, watch));
  return 0;
}

struct SizesArgs {
  std::string tree;
  std::string out;
  uint32_t level = 0;
};

int cmd_stats_sizes(const SizesArgs& a) {
  Stopwatch watch;
  const ct::ClusterTree tree = ct::load_tree(a.tree);
  const auto rows = ct::cluster_size_histogram(tree, a.level);
  const json config{{"tree", a.tree}, {"level", a.level},
                    {"out", a.out.empty() ? json() : json(a.out)}};
  emit_csv(ct::histogram_csv(rows), a.out,
           make_manifest("stats sizes", config, {a.tree}, 0, watch));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical k-means data curation: trees, balanced subsets, stratified batches"};
  app.set_version_flag("--version", std::string("curatree ") + ct::kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen_p = app.add_subcommand("gen", "generate a synthetic heavy-tailed embedding file");
  cmd_gen_p->add_option("--out", gen.out, "output embedding file")->required();
  cmd_gen_p->add_option("--count", gen.count, "number of rows");
  cmd_gen_p->add_option("--dim", gen.dim, "vector dimensionality");
  cmd_gen_p->add_option("--components", gen.components, "mixture components");
  cmd_gen_p->add_option("--tail-exponent", gen.tail_exponent, "Zipf tail exponent");
  cmd_gen_p->add_option("--seed", gen.seed, "random seed");
  cmd_gen_p->add_option("--labels-out", gen.labels_out, "write generating labels, one per line");

  BuildTreeArgs bt;
  auto* cmd_bt = app.add_subcommand("build-tree", "build a hierarchical clustering tree");
  cmd_bt->add_option("--embeddings", bt.embeddings, "input embedding file")->required();
  cmd_bt->add_option("--levels", bt.levels, "cluster counts, bottom to top, e.g. 3500,350,35,7")
      ->required()
      ->delimiter(',');
  cmd_bt->add_flag("--normalize,!--no-normalize", bt.normalize, "L2-normalize rows on load");
  cmd_bt->add_option("--seed", bt.seed, "random seed");
  cmd_bt->add_option("--seeding", bt.seeding, "plus_plus or random_rows");
  cmd_bt->add_option("--max-iters", bt.max_iters, "k-means iteration cap");
  cmd_bt->add_option("--tol", bt.tol, "centroid displacement tolerance (default: auto)");
  cmd_bt->add_option("--out", bt.out, "output tree file")->required();

  SampleArgs sa;
  auto* cmd_sa = app.add_subcommand("sample", "draw a balanced curated subset from a tree");
  cmd_sa->add_option("--tree", sa.tree, "input tree file")->required();
  cmd_sa->add_option("--level", sa.level, "sampling level (2..depth)")->required();
  auto* frac_opt = cmd_sa->add_option("--fraction", sa.fraction, "target as fraction of count");
  auto* size_opt = cmd_sa->add_option("--size", sa.size, "target as absolute size");
  frac_opt->excludes(size_opt);
  size_opt->excludes(frac_opt);
  cmd_sa->add_flag("--exact", sa.exact, "trim overshoot to the exact target");
  cmd_sa->add_option("--seed", sa.seed, "random seed");
  cmd_sa->add_option("--out", sa.out, "output subset file")->required();

  BatchesArgs ba;
  auto* cmd_ba = app.add_subcommand("batches", "plan training batches over a curated subset");
  cmd_ba->add_option("--tree", ba.tree, "input tree file")->required();
  cmd_ba->add_option("--subset", ba.subset, "input subset file")->required();
  cmd_ba->add_option("--batch-size", ba.batch_size, "tiles per batch")->required();
  cmd_ba->add_option("--num-batches", ba.num_batches, "number of batches")->required();
  cmd_ba->add_option("--mode", ba.mode, "stratified or random");
  cmd_ba->add_option("--seed", ba.seed, "random seed");
  cmd_ba->add_option("--out", ba.out, "output batch plan (JSON lines)")->required();
  cmd_ba->add_option("--ledger-out", ba.ledger_out, "observation ledger checkpoint");

  auto* cmd_st = app.add_subcommand("stats", "diagnostics as CSV");
  cmd_st->require_subcommand(1);

  TvCurveArgs tv;
  auto* cmd_tv = cmd_st->add_subcommand("tv-curve", "TV against uniform across subset fractions");
  cmd_tv->add_option("--tree", tv.tree, "input tree file")->required();
  cmd_tv->add_option("--sampling-level", tv.sampling_level, "level sampled from")->required();
  cmd_tv->add_option("--measure-level", tv.measure_level, "level measured at")->required();
  cmd_tv->add_option("--fractions", tv.fractions, "increasing fractions in (0,1]")
      ->required()
      ->delimiter(',');
  cmd_tv->add_option("--seed", tv.seed, "random seed");
  cmd_tv->add_option("--out", tv.out, "CSV output file (default: stdout)");

  AriArgs ar;
  auto* cmd_ar = cmd_st->add_subcommand("ari", "adjusted Rand index of two labelings");
  cmd_ar->add_option("--labels-a", ar.labels_a, "label file, one integer per line")->required();
  cmd_ar->add_option("--labels-b", ar.labels_b, "label file, one integer per line")->required();
  cmd_ar->add_option("--out", ar.out, "CSV output file (default: stdout)");

  SizesArgs sz;
  auto* cmd_sz = cmd_st->add_subcommand("sizes", "cluster size histogram at a level");
  cmd_sz->add_option("--tree", sz.tree, "input tree file")->required();
  cmd_sz->add_option("--level", sz.level, "tree level")->required();
  cmd_sz->add_option("--out", sz.out, "CSV output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error=UsageError msg=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    if (cmd_gen_p->parsed()) return cmd_gen(gen);
    if (cmd_bt->parsed()) return cmd_build_tree(bt);
    if (cmd_sa->parsed()) {
      if (!sa.fraction && !sa.size) {
        ct::fail(ct::errc::invalid_input, "one of --fraction or --size is required");
      }
      return cmd_sample(sa);
    }
    if (cmd_ba->parsed()) return cmd_batches(ba);
    if (cmd_st->parsed()) {
      if (cmd_tv->parsed()) return cmd_stats_tv_curve(tv);
      if (cmd_ar->parsed()) return cmd_stats_ari(ar);
      if (cmd_sz->parsed()) return cmd_stats_sizes(sz);
    }
    std::cerr << "error=UsageError msg=\"no subcommand\"\n";
    return 2;
  } catch (const ct::Error& e) {
    std::cerr << "error=" << ct::errc_name(e.code()) << " msg=\"" << e.what() << "\"\n";
    return e.code() == ct::errc::io_error ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error=Internal msg=\"" << e.what() << "\"\n";
    return 4;
  }
}
