#include "one2all/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace one2all {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view cell, std::size_t row) {
  cell = trim(cell);
  double v = 0;
  const auto* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty())
    throw ParseError("non-numeric cell '" + std::string(cell) + "'", row);
  return v;
}

std::vector<double> split_numbers(std::string_view line, char delim, std::size_t row) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(parse_number(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start), row));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated IDX header");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

}  // namespace

void set_ground_truth(LabeledDataset& data, CentroidSet<double> centroids) {
  data.groundTruthCost = cost(MetricSpace<double>::euclidean(2), data.points, centroids);
  data.groundTruth = std::move(centroids);
}

LabeledDataset gen_gmm(Index n, Index d, Index k, std::uint64_t seed, const GmmOptions& opt) {
  if (k < 1 || n < k || d < 1) throw StructuralError("gen_gmm needs n >= k >= 1 and d >= 1");
  if (!(opt.spacing > 0)) throw StructuralError("spacing must be positive");
  const double sigmaMax = opt.sigmaMax > 0 ? opt.sigmaMax : opt.spacing;

  Matrix<double> pts(d, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Matrix<double> means = Matrix<double>::Zero(d, k);
  const Rng root(seed);
  Index offset = 0;
  for (Index c = 0; c < k; ++c) {
    means(0, c) = static_cast<double>(c) * opt.spacing;
    Rng rng = root.split(static_cast<std::uint64_t>(c));
    const double sigma = sigmaMax * rng.uniform_open0();
    std::normal_distribution<double> noise(0.0, sigma);
    const Index count = n / k + (c < n % k ? 1 : 0);
    for (Index i = offset; i < offset + count; ++i) {
      for (Index j = 0; j < d; ++j) pts(j, i) = means(j, c) + noise(rng);
      labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
    }
    offset += count;
  }
  LabeledDataset data{WeightedPointSet<double>(std::move(pts)), std::nullopt, std::nullopt, std::move(labels), "gmm", k};
  set_ground_truth(data, CentroidSet<double>(means));
  return data;
}

LabeledDataset parse_delimited(const std::string& text, const DelimitedOptions& opt) {
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<double>> centroids;
  std::string name = "delimited";
  Index k = 0;
  int weightColumn = opt.weightColumn;
  bool weightedHeader = false;
  bool headerSkipped = !opt.hasHeader;
  std::size_t width = 0;

  std::size_t lineNo = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    ++lineNo;
    start = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      std::istringstream hs{std::string(line.substr(1))};
      std::string tag;
      hs >> tag;
      if (tag == "one2all-dataset") {
        std::string version;
        Index hn = 0, hd = 0;
        hs >> version >> hn >> hd >> k;
        if (version != "v1") throw ParseError("unsupported dataset version '" + version + "'", lineNo);
        name = "dataset";
      } else if (tag == "weighted") {
        weightedHeader = true;
      } else if (tag == "centroid") {
        std::string rest;
        std::getline(hs, rest);
        centroids.push_back(split_numbers(trim(rest), opt.delimiter, lineNo));
      }
      continue;
    }
    if (!headerSkipped) {
      headerSkipped = true;
      continue;
    }
    auto values = split_numbers(line, opt.delimiter, lineNo);
    if (width == 0) width = values.size();
    if (values.size() != width)
      throw ParseError("ragged row: expected " + std::to_string(width) + " columns, got " + std::to_string(values.size()),
                       lineNo);
    if (weightedHeader && weightColumn < 0) weightColumn = static_cast<int>(width) - 1;
    if (weightColumn >= 0) {
      if (static_cast<std::size_t>(weightColumn) >= width) throw ParseError("weight column out of range", lineNo);
      const double w = values[static_cast<std::size_t>(weightColumn)];
      if (!(w > 0) || !std::isfinite(w)) throw ParseError("nonpositive weight", lineNo);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("no data rows", 0);

  const Index dims = static_cast<Index>(width) - (weightColumn >= 0 ? 1 : 0);
  if (dims < 1) throw ParseError("rows have no coordinate columns", 0);
  Matrix<double> pts(dims, static_cast<Index>(rows.size()));
  Vector<double> w = Vector<double>::Ones(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == weightColumn)
        w(static_cast<Index>(i)) = rows[i][c];
      else
        pts(j++, static_cast<Index>(i)) = rows[i][c];
    }
  }
  LabeledDataset data{WeightedPointSet<double>(std::move(pts), std::move(w)), std::nullopt, std::nullopt, {}, name, k};
  if (!centroids.empty()) {
    Matrix<double> gt(dims, static_cast<Index>(centroids.size()));
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (static_cast<Index>(centroids[c].size()) != dims) throw ParseError("centroid dimension mismatch", 0);
      for (Index j = 0; j < dims; ++j) gt(j, static_cast<Index>(c)) = centroids[c][static_cast<std::size_t>(j)];
    }
    set_ground_truth(data, CentroidSet<double>(gt));
    if (data.k == 0) data.k = static_cast<Index>(centroids.size());
  }
  return data;
}

LabeledDataset load_delimited(const std::filesystem::path& path, const DelimitedOptions& opt) {
  auto data = parse_delimited(read_file(path), opt);
  data.name = path.stem().string();
  return data;
}

std::string format_dataset(const LabeledDataset& data) {
  const auto& X = data.points;
  const bool weighted = (X.weights().array() != 1.0).any();
  std::string out = "# one2all-dataset v1 " + std::to_string(X.size()) + " " + std::to_string(X.dim()) + " " +
                    std::to_string(data.k) + "\n";
  if (weighted) out += "# weighted\n";
  if (data.groundTruth) {
    for (Index c = 0; c < data.groundTruth->size(); ++c) {
      out += "# centroid ";
      for (Index j = 0; j < X.dim(); ++j) {
        if (j) out += ',';
        append_number(out, data.groundTruth->centroid(c)(j));
      }
      out += '\n';
    }
  }
  for (Index i = 0; i < X.size(); ++i) {
    for (Index j = 0; j < X.dim(); ++j) {
      if (j) out += ',';
      append_number(out, X.point(i)(j));
    }
    if (weighted) {
      out += ',';
      append_number(out, X.weight(i));
    }
    out += '\n';
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string(), 0);
  out << format_dataset(data);
}

CentroidSet<double> load_centroids(const std::filesystem::path& path, char delimiter) {
  DelimitedOptions opt;
  opt.delimiter = delimiter;
  return CentroidSet<double>(parse_delimited(read_file(path), opt).points.points());
}

void write_centroids(std::ostream& out, const CentroidSet<double>& Q, char delimiter) {
  std::string s;
  for (Index c = 0; c < Q.size(); ++c) {
    for (Index j = 0; j < Q.dim(); ++j) {
      if (j) s += delimiter;
      append_number(s, Q.centroid(c)(j));
    }
    s += '\n';
  }
  out << s;
}

LabeledDataset parse_idx(const std::string& images, const std::optional<std::string>& labels) {
  if (read_be32(images, 0) != 0x00000803u) throw FormatError("bad IDX image magic");
  const std::size_t count = read_be32(images, 4), rows = read_be32(images, 8), cols = read_be32(images, 12);
  const std::size_t d = rows * cols;
  if (count == 0 || d == 0) throw FormatError("empty IDX image file");
  if (images.size() < 16 + count * d) throw FormatError("truncated IDX image payload");

  Matrix<double> pts(static_cast<Index>(d), static_cast<Index>(count));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < d; ++j)
      pts(static_cast<Index>(j), static_cast<Index>(i)) = static_cast<unsigned char>(images[16 + i * d + j]);
  LabeledDataset data{WeightedPointSet<double>(std::move(pts)), std::nullopt, std::nullopt, {}, "idx", 0};

  if (labels) {
    if (read_be32(*labels, 0) != 0x00000801u) throw FormatError("bad IDX label magic");
    const std::size_t lcount = read_be32(*labels, 4);
    if (lcount != count) throw FormatError("image and label counts differ");
    if (labels->size() < 8 + count) throw FormatError("truncated IDX label payload");
    std::map<int, std::pair<Vector<double>, double>> sums;
    data.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const int label = static_cast<unsigned char>((*labels)[8 + i]);
      data.labels[i] = label;
      auto [it, inserted] = sums.try_emplace(label, Vector<double>::Zero(static_cast<Index>(d)), 0.0);
      it->second.first += data.points.point(static_cast<Index>(i));
      it->second.second += 1;
    }
    Matrix<double> gt(static_cast<Index>(d), static_cast<Index>(sums.size()));
    Index c = 0;
    for (const auto& [label, acc] : sums) gt.col(c++) = acc.first / acc.second;
    data.k = static_cast<Index>(sums.size());
    set_ground_truth(data, CentroidSet<double>(gt));
  }
  return data;
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  std::optional<std::string> lbytes;
  if (labels) lbytes = read_file(*labels);
  auto data = parse_idx(read_file(images), lbytes);
  data.name = images.stem().string();
  return data;
}

}  // namespace one2all
