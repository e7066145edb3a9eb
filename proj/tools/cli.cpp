#include "cli.hpp"

#include "one2all/bench.hpp"
#include "one2all/data.hpp"
#include "one2all/oracle.hpp"
#include "one2all/parallel.hpp"
#include "one2all/wrapper.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace one2all::cli {

namespace {

struct InputFormat {
  std::string delimiter = ",";
  bool header = false;
  int weightColumn = -1;

  DelimitedOptions options() const {
    if (delimiter.size() != 1) throw CLI::ValidationError("--delimiter", "must be a single character");
    return {delimiter[0], header, weightColumn};
  }
};

void add_format(CLI::App* cmd, InputFormat& f) {
  cmd->add_option("--delimiter", f.delimiter, "Column delimiter");
  cmd->add_flag("--header", f.header, "First data row is a header");
  cmd->add_option("--weight-column", f.weightColumn, "Zero-based column holding point weights")
      ->check(CLI::NonNegativeNumber);
}

LabeledDataset read_input(const std::string& path, const InputFormat& f) {
  return load_delimited(path, f.options());
}

class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw FormatError("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

void print_report(std::ostream& out, const WrapperReport& r) {
  out << "certified: " << (r.certified ? "true" : "false") << '\n'
      << "rounds: " << r.rounds << '\n'
      << "sweet_spot: " << r.sweetSpot << '\n'
      << "sample_size: " << r.finalSampleSize << '\n'
      << "expected_sample_size: " << r.finalExpectedSize << '\n'
      << "r: " << r.r << '\n'
      << "cost: " << r.finalVQ << '\n'
      << "estimate: " << r.finalEstimate << '\n'
      << "overhead: " << r.overhead << " (bound " << r.overheadBound << ")\n";
  for (const auto& rec : r.log)
    out << "round " << rec.round << ": r=" << rec.r << " |S|=" << rec.sampleSize << " est=" << rec.estimate
        << " V=" << rec.VQ << " " << rec.action << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive sampling for clustering cost estimation", "one2all"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  double power = 2;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "Worker threads (default: ONE2ALL_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--power", power, "Distance is ||x-y||^power")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a Gaussian mixture dataset");
  Index gn = 0, gd = 0, gk = 0;
  GmmOptions gmm;
  std::string genOut;
  gen->add_option("--n", gn)->required()->check(CLI::PositiveNumber);
  gen->add_option("--d", gd)->required()->check(CLI::PositiveNumber);
  gen->add_option("--k", gk)->required()->check(CLI::PositiveNumber);
  gen->add_option("--delta-spacing", gmm.spacing, "Distance between consecutive means")->check(CLI::PositiveNumber);
  gen->add_option("--sigma-max", gmm.sigmaMax, "Largest component sigma (default: spacing)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", genOut, "Output path (default: stdout)");

  // oracle-build
  auto* build = app.add_subcommand("oracle-build", "Build and save a cost oracle");
  std::string buildIn, buildOut;
  InputFormat buildFmt;
  Index buildK = 0, buildEll = 0;
  double buildEps = 0.1;
  std::optional<double> buildC;
  build->add_option("--in", buildIn)->required();
  build->add_option("--out", buildOut)->required();
  build->add_option("--k", buildK, "Clustering size; without --C the threshold is v_2k")
      ->required()
      ->check(CLI::PositiveNumber);
  build->add_option("--eps", buildEps)->check(CLI::PositiveNumber);
  build->add_option("--ell", buildEll, "kmeans++ iterations when --C is given (default 2k)")
      ->check(CLI::PositiveNumber);
  build->add_option("--C", buildC, "Fixed cost threshold")->check(CLI::PositiveNumber);
  add_format(build, buildFmt);

  // oracle-query
  auto* query = app.add_subcommand("oracle-query", "Estimate clustering costs with a saved oracle");
  std::string oraclePath, queryData;
  std::vector<std::string> queries;
  bool feedback = false;
  InputFormat queryFmt;
  query->add_option("--oracle", oraclePath)->required();
  query->add_option("--query", queries, "Centroid file, one centroid per row (repeatable)")->required();
  query->add_flag("--feedback", feedback, "Grow the sample when a query falls below the threshold");
  query->add_option("--data", queryData, "Dataset the oracle was built from (needed with --feedback)");
  add_format(query, queryFmt);

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Cluster through adaptively sized samples");
  std::string clusterIn, clusterOut, certifyMode = "exact";
  InputFormat clusterFmt;
  Index clusterK = 0;
  double clusterEps = 0.1;
  int restarts = 5, lloydIters = 20;
  WrapperOptions wopt;
  cluster->add_option("--in", clusterIn)->required();
  cluster->add_option("--k", clusterK)->required()->check(CLI::PositiveNumber);
  cluster->add_option("--eps", clusterEps)->check(CLI::PositiveNumber);
  cluster->add_option("--restarts", restarts)->check(CLI::PositiveNumber);
  cluster->add_option("--lloyd-iters", lloydIters)->check(CLI::PositiveNumber);
  cluster->add_option("--copies", wopt.copies)->check(CLI::PositiveNumber);
  cluster->add_option("--max-rounds", wopt.maxRounds)->check(CLI::PositiveNumber);
  cluster->add_option("--ell", wopt.ell, "kmeans++ iterations (default 2k)")->check(CLI::PositiveNumber);
  cluster->add_option("--certify", certifyMode)->check(CLI::IsMember({"exact", "validation"}));
  cluster->add_option("--out", clusterOut, "Write centroids here instead of stdout");
  add_format(cluster, clusterFmt);

  // bench
  auto* bench = app.add_subcommand("bench", "Run an experiment grid");
  std::string presetName, benchOut, tableOut, timingOut, idxImages, idxLabels;
  int reps = 1;
  Index bn = 0, bd = 0, bk = 0;
  std::vector<double> benchEps;
  BenchConfig bcfg;
  bench->add_option("--preset", presetName)->check(CLI::IsMember({"table1-small", "table1", "table1-gmm"}));
  bench->add_option("--n", bn)->check(CLI::PositiveNumber);
  bench->add_option("--d", bd)->check(CLI::PositiveNumber);
  bench->add_option("--k", bk)->check(CLI::PositiveNumber);
  bench->add_option("--eps", benchEps, "Repeatable")->check(CLI::PositiveNumber);
  bench->add_option("--idx-images", idxImages);
  bench->add_option("--idx-labels", idxLabels);
  bench->add_option("--reps", reps)->check(CLI::PositiveNumber);
  bench->add_option("--restarts", bcfg.restarts)->check(CLI::PositiveNumber);
  bench->add_option("--lloyd-iters", bcfg.lloydIters)->check(CLI::PositiveNumber);
  bench->add_option("--est-draws", bcfg.estDraws)->check(CLI::PositiveNumber);
  bench->add_option("--out", benchOut, "One JSON object per run (default: stdout)");
  bench->add_option("--table", tableOut, "Delimited summary of per-cell medians");
  bench->add_option("--timing", timingOut, "Wall-clock times, one JSON object per run");

  // figdata
  auto* fig = app.add_subcommand("figdata", "Per-prefix kmeans++ cost and overhead curves");
  std::string figIn, figOut;
  InputFormat figFmt;
  Index fn = 0, fd = 0, fk = 0, fell = 0;
  int figSeeds = 10;
  fig->add_option("--in", figIn, "Dataset (default: generate a mixture from --n/--d/--k)");
  fig->add_option("--n", fn)->check(CLI::PositiveNumber);
  fig->add_option("--d", fd)->check(CLI::PositiveNumber);
  fig->add_option("--k", fk)->check(CLI::PositiveNumber);
  fig->add_option("--ell", fell, "Prefix length (default 2k)")->check(CLI::PositiveNumber);
  fig->add_option("--seeds", figSeeds)->check(CLI::PositiveNumber);
  fig->add_option("--out", figOut, "Prefix for <out>.cost.csv and <out>.overhead.csv (default: stdout)");
  add_format(fig, figFmt);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  auto usage = [&](const std::string& msg) {
    err << "error: " << msg << '\n';
    return static_cast<int>(kUsage);
  };

  try {
    if (threads > 0) set_thread_count(threads);
    const auto space = MetricSpace<double>::euclidean(power);

    if (gen->parsed()) {
      if (gn < gk) return usage("--n must be at least --k");
      const auto data = gen_gmm(gn, gd, gk, seed, gmm);
      OutputFile f(genOut, out);
      f.get() << format_dataset(data);
      return kOk;
    }

    if (build->parsed()) {
      const auto data = read_input(buildIn, buildFmt);
      const auto& X = data.points;
      if (buildK > X.size()) return usage("--k exceeds the number of points");
      auto state = buildC ? build_oracle(space, X, std::min(buildEll > 0 ? buildEll : 2 * buildK, X.size()), *buildC,
                                         buildEps, seed, buildK)
                          : build_feedback_oracle(space, X, buildK, buildEps, seed);
      save_oracle(state, space, buildOut);
      out << "prefix: " << state.prefixIndex << '\n'
          << "threshold: " << state.C << '\n'
          << "sample_size: " << state.sample.size() << '\n'
          << "expected_sample_size: " << state.sample.expected_size() << '\n';
      return kOk;
    }

    if (query->parsed()) {
      if (feedback && queryData.empty()) return usage("--feedback needs --data");
      auto loaded = load_oracle(oraclePath);
      const auto qspace = MetricSpace<double>::euclidean(loaded.power);
      std::optional<LabeledDataset> data;
      if (!queryData.empty()) {
        data = read_input(queryData, queryFmt);
        if (data->points.size() != loaded.state.population())
          throw StructuralError("dataset size differs from the oracle's population");
      }
      bool mutated = false;
      for (const auto& path : queries) {
        const auto Q = load_centroids(path, queryFmt.options().delimiter);
        if (feedback) {
          const auto before = loaded.state.updateCount;
          const auto ans = feedback_query(qspace, data->points, loaded.state, Q);
          mutated = mutated || loaded.state.updateCount != before;
          out << path << ',' << ans.value << ',' << (ans.wasExact ? "exact" : "estimate") << '\n';
        } else {
          out << path << ',' << one2all::query(qspace, loaded.state, Q) << '\n';
        }
      }
      if (mutated) {
        save_oracle(loaded.state, qspace, oraclePath);
        out << "updates: " << loaded.state.updateCount << '\n'
            << "threshold: " << loaded.state.C << '\n';
      }
      return kOk;
    }

    if (cluster->parsed()) {
      const auto data = read_input(clusterIn, clusterFmt);
      if (clusterK > data.points.size()) return usage("--k exceeds the number of points");
      wopt.seed = seed;
      wopt.certify = certifyMode == "validation" ? CertifyMode::Validation : CertifyMode::Exact;
      const auto result =
          run_wrapper(space, data.points, clusterK, clusterEps, lloyd_clusterer<double>(restarts, lloydIters), wopt);
      if (!clusterOut.empty()) {
        OutputFile f(clusterOut, out);
        write_centroids(f.get(), result.centroids);
      } else {
        write_centroids(out, result.centroids);
      }
      print_report(out, result.report);
      return kOk;
    }

    if (bench->parsed()) {
      std::vector<CellSpec> cells;
      if (!presetName.empty()) {
        cells = preset(presetName);
      } else if (!idxImages.empty()) {
        if (bk == 0) return usage("--idx-images needs --k");
        for (double e : benchEps.empty() ? std::vector<double>{0.2} : benchEps)
          cells.push_back({"idx", 0, 0, bk, e, idxImages, idxLabels});
      } else {
        if (bn == 0 || bd == 0 || bk == 0) return usage("bench needs --preset, --idx-images or --n/--d/--k");
        for (double e : benchEps.empty() ? std::vector<double>{0.1} : benchEps)
          cells.push_back({"gmm", bn, bd, bk, e, "", ""});
      }
      const auto grid = run_grid(cells, reps, seed, bcfg);
      {
        OutputFile f(benchOut, out);
        for (const auto& r : grid.runs) f.get() << to_jsonl(r) << '\n';
      }
      if (!tableOut.empty()) {
        OutputFile f(tableOut, out);
        f.get() << summary_table(grid.medians);
      }
      if (!timingOut.empty()) {
        OutputFile f(timingOut, out);
        for (const auto& r : grid.runs) f.get() << timing_jsonl(r) << '\n';
      }
      for (const auto& failure : grid.failures) err << "failed: " << failure << '\n';
      return grid.failures.empty() ? kOk : kDataError;
    }

    if (fig->parsed()) {
      if (figIn.empty() && (fn == 0 || fd == 0 || fk == 0)) return usage("figdata needs --in or --n/--d/--k");
      const auto data = figIn.empty() ? gen_gmm(fn, fd, fk, seed) : read_input(figIn, figFmt);
      const Index k = fk > 0 ? fk : std::max<Index>(data.k, 1);
      const Index ell = std::min(fell > 0 ? fell : 2 * k, data.points.size());
      const auto curve = sweet_spot_curve(data, ell, figSeeds, seed);
      if (figOut.empty()) {
        out << "i,cost_ratio,overhead\n";
        for (const auto& c : curve) out << c.i << ',' << c.costRatio << ',' << c.overhead << '\n';
      } else {
        OutputFile costFile(figOut + ".cost.csv", out);
        OutputFile overheadFile(figOut + ".overhead.csv", out);
        costFile.get() << "i,cost_ratio\n";
        overheadFile.get() << "i,overhead\n";
        for (const auto& c : curve) {
          costFile.get() << c.i << ',' << c.costRatio << '\n';
          overheadFile.get() << c.i << ',' << c.overhead << '\n';
        }
      }
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return usage("no command given");
}

}  // namespace one2all::cli
