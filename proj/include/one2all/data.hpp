#pragma once

#include "one2all/core.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace one2all {

/// Points plus, when known, reference ("ground truth") centroids.
struct LabeledDataset {
  WeightedPointSet<double> points;
  std::optional<CentroidSet<double>> groundTruth;
  std::optional<double> groundTruthCost;  // squared-Euclidean cost of groundTruth
  std::vector<int> labels;                // generating component / class, when known
  std::string name;
  Index k = 0;

  Index n() const { return points.size(); }
  Index d() const { return points.dim(); }
};

struct GmmOptions {
  double spacing = 10;  // distance between consecutive means on the first axis
  double sigmaMax = 0;  // per-component sigma ~ Uniform(0, sigmaMax]; 0 means `spacing`
};

/// Mixture of k isotropic Gaussians in R^d with means i * spacing * e_1.
/// Points are split evenly, the remainder going to the first components.
LabeledDataset gen_gmm(Index n, Index d, Index k, std::uint64_t seed, const GmmOptions& opt = {});

struct DelimitedOptions {
  char delimiter = ',';
  bool hasHeader = false;
  int weightColumn = -1;  // column holding weights; -1 for unit weights
};

/// Rows of numbers, one point per row. Lines starting with '#' are comments,
/// except the native dump header and its `# centroid` / `# weighted` lines.
LabeledDataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& opt = {});
LabeledDataset parse_delimited(const std::string& text, const DelimitedOptions& opt = {});

/// Native dump: `# one2all-dataset v1 n d k`, optional `# weighted` (weights in
/// the last column), one `# centroid c1,...,cd` line per ground-truth centroid,
/// then one row per point. Values are written in shortest round-trip form.
void write_dataset(const std::filesystem::path& path, const LabeledDataset& data);
std::string format_dataset(const LabeledDataset& data);

/// Centroids in the delimited point format, one per row.
CentroidSet<double> load_centroids(const std::filesystem::path& path, char delimiter = ',');
void write_centroids(std::ostream& out, const CentroidSet<double>& Q, char delimiter = ',');

/// IDX images (magic 0x00000803) with optional labels (0x00000801). Images are
/// flattened row-major to rows*cols values in [0, 255]. With labels, the
/// ground truth is the per-class mean, classes in increasing label order.
LabeledDataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels = {});
LabeledDataset parse_idx(const std::string& images, const std::optional<std::string>& labels = {});

/// Attaches ground-truth centroids and their squared-Euclidean cost.
void set_ground_truth(LabeledDataset& data, CentroidSet<double> centroids);

}  // namespace one2all
