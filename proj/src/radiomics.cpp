#include "radiocon/radiomics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "radiocon/data.hpp"
#include "radiocon/tensor.hpp"

namespace radiocon::radiomics {

namespace {

double plog2p(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

std::vector<std::string> build_names() {
  std::vector<std::string> names;
  auto add = [&](std::string_view prefix, std::initializer_list<std::string_view> items) {
    for (auto item : items) names.push_back(std::string(prefix) + "_" + std::string(item));
  };
  add("shape2D", {"PixelSurface", "Perimeter", "PerimeterSurfaceRatio", "Sphericity",
                  "MaximumDiameter", "MajorAxisLength", "MinorAxisLength", "Elongation",
                  "MeshSurface"});
  add("firstorder", {"Energy", "Entropy", "Minimum", "10Percentile", "90Percentile", "Maximum",
                     "Mean", "Median", "InterquartileRange", "Range", "MeanAbsoluteDeviation",
                     "RobustMeanAbsoluteDeviation", "RootMeanSquared", "Skewness", "Kurtosis",
                     "Variance", "Uniformity", "TotalEnergy"});
  add("glcm", {"Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade",
               "ClusterTendency", "Contrast", "Correlation", "DifferenceAverage",
               "DifferenceEntropy", "DifferenceVariance", "JointEnergy", "JointEntropy", "Imc1",
               "Imc2", "Idm", "Idmn", "Id", "Idn", "InverseVariance", "MaximumProbability",
               "SumAverage", "SumEntropy", "SumSquares", "MCC"});
  add("glrlm", {"ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity",
                "GrayLevelNonUniformityNormalized", "RunLengthNonUniformity",
                "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
                "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis",
                "HighGrayLevelRunEmphasis", "ShortRunLowGrayLevelEmphasis",
                "ShortRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis",
                "LongRunHighGrayLevelEmphasis"});
  add("glszm", {"SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity",
                "GrayLevelNonUniformityNormalized", "SizeZoneNonUniformity",
                "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
                "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis",
                "HighGrayLevelZoneEmphasis", "SmallAreaLowGrayLevelEmphasis",
                "SmallAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis",
                "LargeAreaHighGrayLevelEmphasis"});
  add("ngtdm", {"Coarseness", "Contrast", "Busyness", "Complexity", "Strength"});
  add("gldm", {"SmallDependenceEmphasis", "LargeDependenceEmphasis", "GrayLevelNonUniformity",
               "DependenceNonUniformity", "DependenceNonUniformityNormalized",
               "GrayLevelVariance", "DependenceVariance", "DependenceEntropy",
               "LowGrayLevelEmphasis", "HighGrayLevelEmphasis",
               "SmallDependenceLowGrayLevelEmphasis", "SmallDependenceHighGrayLevelEmphasis",
               "LargeDependenceLowGrayLevelEmphasis", "LargeDependenceHighGrayLevelEmphasis"});
  return names;
}

void check_roi(const DiscretizedRoi& disc) {
  if (disc.roi_size() == 0) throw ContractError("texture features need a non-empty ROI");
}

// Shared by run-length and size-zone matrices (and, minus two entries, the
// dependence matrix): rows are gray levels, columns are lengths/sizes.
std::array<double, 16> emphasis_features(const Eigen::MatrixXd& m, double roi_pixels) {
  const double total = m.sum();
  std::array<double, 16> f{};
  if (total <= 0.0) return f;
  double se = 0, le = 0, lgl = 0, hgl = 0, slgl = 0, shgl = 0, llgl = 0, lhgl = 0;
  double mu_i = 0, mu_j = 0, entropy = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double i = static_cast<double>(r + 1);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      if (v == 0.0) continue;
      const double j = static_cast<double>(c + 1);
      se += v / (j * j);
      le += v * j * j;
      lgl += v / (i * i);
      hgl += v * i * i;
      slgl += v / (i * i * j * j);
      shgl += v * i * i / (j * j);
      llgl += v * j * j / (i * i);
      lhgl += v * i * i * j * j;
      const double p = v / total;
      mu_i += p * i;
      mu_j += p * j;
      entropy -= plog2p(p);
    }
  }
  double var_i = 0, var_j = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double p = m(r, c) / total;
      if (p == 0.0) continue;
      var_i += p * std::pow(static_cast<double>(r + 1) - mu_i, 2);
      var_j += p * std::pow(static_cast<double>(c + 1) - mu_j, 2);
    }
  }
  const Eigen::VectorXd per_level = m.rowwise().sum();
  const Eigen::VectorXd per_size = m.colwise().sum().transpose();
  const double gln = per_level.squaredNorm() / total;
  const double sn = per_size.squaredNorm() / total;
  f = {se / total,
       le / total,
       gln,
       gln / total,
       sn,
       sn / total,
       total / roi_pixels,
       var_i,
       var_j,
       entropy,
       lgl / total,
       hgl / total,
       slgl / total,
       shgl / total,
       llgl / total,
       lhgl / total};
  return f;
}

// Percentile with linear interpolation between closest ranks.
double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

std::span<const std::string> feature_names() {
  static const std::vector<std::string> names = build_names();
  return names;
}

std::size_t RoiMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](auto b) { return b != 0; }));
}

std::size_t DiscretizedRoi::roi_size() const {
  return static_cast<std::size_t>(std::count_if(levels.begin(), levels.end(), [](int l) { return l > 0; }));
}

DiscretizedRoi discretize(const GrayImage& image, const RoiMask& mask, int bins) {
  if (bins < 2) throw ParameterError("discretize: bins must be >= 2");
  if (mask.width != image.width || mask.height != image.height) {
    throw DimensionError("discretize: mask and image dimensions differ");
  }
  if (mask.count() == 0) throw ContractError("discretize: empty ROI mask");

  int lo = 255, hi = 0;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (!mask.bits[i]) continue;
    lo = std::min<int>(lo, image.pixels[i]);
    hi = std::max<int>(hi, image.pixels[i]);
  }
  DiscretizedRoi out;
  out.width = image.width;
  out.height = image.height;
  out.levels.assign(image.pixels.size(), 0);
  out.gray_levels = lo == hi ? 1 : bins;
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (!mask.bits[i]) continue;
    if (lo == hi) {
      out.levels[i] = 1;
      continue;
    }
    // Integer arithmetic keeps bin edges exact and invariant to affine rescaling.
    const int bin = ((image.pixels[i] - lo) * bins) / (hi - lo);
    out.levels[i] = std::min(bin, bins - 1) + 1;
  }
  return out;
}

std::array<double, kFirstOrderCount> first_order_features(const GrayImage& image,
                                                          const RoiMask& mask, int bins) {
  const DiscretizedRoi disc = discretize(image, mask, bins);
  std::vector<double> x;
  x.reserve(mask.count());
  std::vector<double> hist(static_cast<std::size_t>(disc.gray_levels), 0.0);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    if (!mask.bits[i]) continue;
    x.push_back(image.pixels[i]);
    hist[static_cast<std::size_t>(disc.levels[i] - 1)] += 1.0;
  }
  const double n = static_cast<double>(x.size());

  double energy = 0, total = 0;
  for (double v : x) {
    energy += v * v;
    total += v;
  }
  const double mean = total / n;
  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  double entropy = 0, uniformity = 0;
  for (double c : hist) {
    const double p = c / n;
    entropy -= plog2p(p);
    uniformity += p * p;
  }

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double p10 = percentile(sorted, 10);
  const double p90 = percentile(sorted, 90);

  double robust_sum = 0, robust_n = 0;
  for (double v : x) {
    if (v >= p10 && v <= p90) {
      robust_sum += v;
      robust_n += 1;
    }
  }
  const double robust_mean = robust_sum / robust_n;
  double rmad = 0;
  for (double v : x) {
    if (v >= p10 && v <= p90) rmad += std::abs(v - robust_mean);
  }
  rmad /= robust_n;

  const double skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
  const double kurtosis = m2 > 0 ? m4 / (m2 * m2) : 0.0;

  return {energy,
          entropy,
          sorted.front(),
          p10,
          p90,
          sorted.back(),
          mean,
          percentile(sorted, 50),
          percentile(sorted, 75) - percentile(sorted, 25),
          sorted.back() - sorted.front(),
          mad,
          rmad,
          std::sqrt(energy / n),
          skewness,
          kurtosis,
          m2,
          uniformity,
          energy};
}

Eigen::MatrixXd cooccurrence_counts(const DiscretizedRoi& disc, Direction dir) {
  const int g = disc.gray_levels;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g, g);
  for (int y = 0; y < disc.height; ++y) {
    for (int x = 0; x < disc.width; ++x) {
      const int a = disc.at(x, y);
      const int b = disc.at(x + dir.dx, y + dir.dy);
      if (a == 0 || b == 0) continue;
      p(a - 1, b - 1) += 1.0;
      p(b - 1, a - 1) += 1.0;
    }
  }
  return p;
}

Eigen::MatrixXd averaged_glcm(const DiscretizedRoi& disc) {
  check_roi(disc);
  const int g = disc.gray_levels;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g, g);
  int used = 0;
  for (const auto& dir : kDirections) {
    const Eigen::MatrixXd counts = cooccurrence_counts(disc, dir);
    const double total = counts.sum();
    if (total == 0.0) continue;
    acc += counts / total;
    ++used;
  }
  if (used == 0) return Eigen::MatrixXd::Ones(1, 1);
  return acc / used;
}

std::array<double, kGlcmCount> glcm_features_from_matrix(const Eigen::MatrixXd& p) {
  const Eigen::Index ng = p.rows();
  const double ngd = static_cast<double>(ng);
  const Eigen::VectorXd px = p.rowwise().sum();
  const Eigen::VectorXd py = p.colwise().sum().transpose();

  double mu_x = 0, mu_y = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    mu_x += static_cast<double>(i + 1) * px(i);
    mu_y += static_cast<double>(i + 1) * py(i);
  }
  double var_x = 0, var_y = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    var_x += std::pow(static_cast<double>(i + 1) - mu_x, 2) * px(i);
    var_y += std::pow(static_cast<double>(i + 1) - mu_y, 2) * py(i);
  }

  Eigen::VectorXd diff = Eigen::VectorXd::Zero(ng);         // |i-j| = k
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(2 * ng + 1);  // i+j = k
  double autocorr = 0, prominence = 0, shade = 0, tendency = 0, contrast = 0;
  double energy = 0, hxy = 0, hxy1 = 0, hxy2 = 0;
  for (Eigen::Index r = 0; r < ng; ++r) {
    for (Eigen::Index c = 0; c < ng; ++c) {
      const double i = static_cast<double>(r + 1);
      const double j = static_cast<double>(c + 1);
      const double v = p(r, c);
      const double pp = px(r) * py(c);
      if (pp > 0) hxy2 -= plog2p(pp);
      if (v == 0.0) continue;
      const double centred = i + j - mu_x - mu_y;
      autocorr += i * j * v;
      prominence += std::pow(centred, 4) * v;
      shade += std::pow(centred, 3) * v;
      tendency += centred * centred * v;
      contrast += (i - j) * (i - j) * v;
      energy += v * v;
      hxy -= plog2p(v);
      hxy1 -= v * std::log2(pp);
      diff(std::abs(r - c)) += v;
      sums(r + c + 2) += v;
    }
  }
  double hx = 0, hy = 0;
  for (Eigen::Index i = 0; i < ng; ++i) {
    hx -= plog2p(px(i));
    hy -= plog2p(py(i));
  }

  const double sigma = std::sqrt(var_x) * std::sqrt(var_y);
  const double correlation = sigma < 1e-12 ? 1.0 : (autocorr - mu_x * mu_y) / sigma;

  double diff_avg = 0, diff_entropy = 0;
  double idm = 0, idmn = 0, id = 0, idn = 0, inv_var = 0;
  for (Eigen::Index k = 0; k < ng; ++k) {
    const double kd = static_cast<double>(k);
    const double v = diff(k);
    diff_avg += kd * v;
    diff_entropy -= plog2p(v);
    idm += v / (1 + kd * kd);
    idmn += v / (1 + kd * kd / (ngd * ngd));
    id += v / (1 + kd);
    idn += v / (1 + kd / ngd);
    if (k > 0) inv_var += v / (kd * kd);
  }
  double diff_var = 0;
  for (Eigen::Index k = 0; k < ng; ++k) {
    diff_var += std::pow(static_cast<double>(k) - diff_avg, 2) * diff(k);
  }
  double sum_avg = 0, sum_entropy = 0;
  for (Eigen::Index k = 2; k <= 2 * ng; ++k) {
    sum_avg += static_cast<double>(k) * sums(k);
    sum_entropy -= plog2p(sums(k));
  }

  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(1.0 - std::exp(-2.0 * std::max(0.0, hxy2 - hxy)));

  // MCC: second largest eigenvalue of Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)).
  // For a symmetric p it is similar to D^-1/2 P D^-1 P D^-1/2, which is symmetric.
  double mcc = 1.0;
  std::vector<Eigen::Index> present;
  for (Eigen::Index i = 0; i < ng; ++i) {
    if (px(i) > 0) present.push_back(i);
  }
  if (present.size() > 1 && sigma >= 1e-12) {
    const auto m = static_cast<Eigen::Index>(present.size());
    Eigen::MatrixXd sub(m, m);
    Eigen::VectorXd d(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      d(a) = px(present[a]);
      for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = p(present[a], present[b]);
    }
    const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = inv_sqrt.asDiagonal() * sub * d.cwiseInverse().asDiagonal() *
                                   sub * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (scaled + scaled.transpose()),
                                                         Eigen::EigenvaluesOnly);
    mcc = std::sqrt(std::max(0.0, solver.eigenvalues()(m - 2)));
  }

  return {autocorr, mu_x,    prominence,  shade,    tendency,   contrast,     correlation, diff_avg,
          diff_entropy, diff_var, energy, hxy,       imc1,       imc2,        idm,         idmn,
          id,       idn,     inv_var,     p.maxCoeff(), sum_avg, sum_entropy, var_x,       mcc};
}

std::array<double, kGlcmCount> glcm_features(const DiscretizedRoi& disc) {
  return glcm_features_from_matrix(averaged_glcm(disc));
}

Eigen::MatrixXd run_length_counts(const DiscretizedRoi& disc, Direction dir) {
  const int max_len = std::max(disc.width, disc.height);
  Eigen::MatrixXd runs = Eigen::MatrixXd::Zero(std::max(disc.gray_levels, 1), max_len);
  // Walk every scan line from the pixel whose predecessor lies outside the image.
  for (int y0 = 0; y0 < disc.height; ++y0) {
    for (int x0 = 0; x0 < disc.width; ++x0) {
      const int px = x0 - dir.dx, py = y0 - dir.dy;
      if (px >= 0 && py >= 0 && px < disc.width && py < disc.height) continue;
      int level = 0, length = 0;
      for (int x = x0, y = y0; x >= 0 && y >= 0 && x < disc.width && y < disc.height;
           x += dir.dx, y += dir.dy) {
        const int l = disc.at(x, y);
        if (l == level && l != 0) {
          ++length;
          continue;
        }
        if (level != 0) runs(level - 1, length - 1) += 1.0;
        level = l;
        length = l != 0 ? 1 : 0;
      }
      if (level != 0) runs(level - 1, length - 1) += 1.0;
    }
  }
  return runs;
}

Eigen::MatrixXd size_zone_counts(const DiscretizedRoi& disc) {
  const std::size_t np = disc.roi_size();
  Eigen::MatrixXd zones = Eigen::MatrixXd::Zero(std::max(disc.gray_levels, 1),
                                                static_cast<Eigen::Index>(std::max<std::size_t>(np, 1)));
  std::vector<std::uint8_t> seen(disc.levels.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < disc.height; ++y) {
    for (int x = 0; x < disc.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * disc.width + x;
      const int level = disc.levels[idx];
      if (level == 0 || seen[idx]) continue;
      seen[idx] = 1;
      stack.assign(1, {x, y});
      int size = 0;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        ++size;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (disc.at(nx, ny) != level) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * disc.width + nx;
            if (seen[nidx]) continue;
            seen[nidx] = 1;
            stack.emplace_back(nx, ny);
          }
        }
      }
      zones(level - 1, size - 1) += 1.0;
    }
  }
  return zones;
}

Eigen::MatrixXd dependence_counts(const DiscretizedRoi& disc) {
  Eigen::MatrixXd deps = Eigen::MatrixXd::Zero(std::max(disc.gray_levels, 1), 9);
  for (int y = 0; y < disc.height; ++y) {
    for (int x = 0; x < disc.width; ++x) {
      const int level = disc.at(x, y);
      if (level == 0) continue;
      int dependence = 1;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx != 0 || dy != 0) && disc.at(x + dx, y + dy) == level) ++dependence;
        }
      }
      deps(level - 1, dependence - 1) += 1.0;
    }
  }
  return deps;
}

std::array<double, kGlrlmCount> glrlm_features_from_matrix(const Eigen::MatrixXd& runs,
                                                           double roi_pixels) {
  return emphasis_features(runs, roi_pixels);
}

std::array<double, kGlszmCount> glszm_features_from_matrix(const Eigen::MatrixXd& zones,
                                                           double roi_pixels) {
  return emphasis_features(zones, roi_pixels);
}

std::array<double, kGldmCount> gldm_features_from_matrix(const Eigen::MatrixXd& deps) {
  const auto e = emphasis_features(deps, deps.sum());
  // Drop GrayLevelNonUniformityNormalized (3) and Percentage (6).
  return {e[0], e[1], e[2], e[4], e[5], e[7], e[8], e[9], e[10], e[11], e[12], e[13], e[14], e[15]};
}

RunZoneFeatures run_zone_features(const DiscretizedRoi& disc) {
  check_roi(disc);
  const double np = static_cast<double>(disc.roi_size());
  Eigen::MatrixXd runs = run_length_counts(disc, kDirections[0]);
  for (std::size_t d = 1; d < kDirections.size(); ++d) runs += run_length_counts(disc, kDirections[d]);
  runs /= static_cast<double>(kDirections.size());

  RunZoneFeatures out;
  out.glrlm = glrlm_features_from_matrix(runs, np);
  out.glszm = glszm_features_from_matrix(size_zone_counts(disc), np);
  out.gldm = gldm_features_from_matrix(dependence_counts(disc));
  return out;
}

NgtdmTable ngtdm_table(const DiscretizedRoi& disc) {
  NgtdmTable t;
  const auto g = static_cast<std::size_t>(std::max(disc.gray_levels, 1));
  t.s.assign(g, 0.0);
  t.n.assign(g, 0.0);
  for (int y = 0; y < disc.height; ++y) {
    for (int x = 0; x < disc.width; ++x) {
      const int level = disc.at(x, y);
      if (level == 0) continue;
      double acc = 0;
      int count = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int l = disc.at(x + dx, y + dy);
          if (l == 0) continue;
          acc += l;
          ++count;
        }
      }
      if (count == 0) continue;
      t.s[static_cast<std::size_t>(level - 1)] += std::abs(level - acc / count);
      t.n[static_cast<std::size_t>(level - 1)] += 1.0;
    }
  }
  return t;
}

std::array<double, kNgtdmCount> ngtdm_features_from_table(const NgtdmTable& table) {
  const std::size_t g = table.n.size();
  double nvp = 0, s_total = 0;
  for (std::size_t i = 0; i < g; ++i) {
    nvp += table.n[i];
    s_total += table.s[i];
  }
  std::array<double, kNgtdmCount> f{1.0 / kCoarsenessEpsilon, 0, 0, 0, 0};
  if (nvp == 0) return f;

  std::vector<double> p(g);
  double ps = 0;
  int present = 0;
  for (std::size_t i = 0; i < g; ++i) {
    p[i] = table.n[i] / nvp;
    ps += p[i] * table.s[i];
    if (p[i] > 0) ++present;
  }
  f[0] = ps < kCoarsenessEpsilon ? 1.0 / kCoarsenessEpsilon : 1.0 / ps;

  double contrast_sum = 0, busy_den = 0, complexity = 0, strength = 0;
  for (std::size_t a = 0; a < g; ++a) {
    if (p[a] == 0) continue;
    const double i = static_cast<double>(a + 1);
    for (std::size_t b = 0; b < g; ++b) {
      if (p[b] == 0) continue;
      const double j = static_cast<double>(b + 1);
      contrast_sum += p[a] * p[b] * (i - j) * (i - j);
      busy_den += std::abs(i * p[a] - j * p[b]);
      complexity += std::abs(i - j) * (p[a] * table.s[a] + p[b] * table.s[b]) / (p[a] + p[b]);
      strength += (p[a] + p[b]) * (i - j) * (i - j);
    }
  }
  if (present > 1) {
    f[1] = contrast_sum / (present * (present - 1.0)) * (s_total / nvp);
  }
  f[2] = busy_den > 0 ? ps / busy_den : 0.0;
  f[3] = complexity / nvp;
  f[4] = s_total > 0 ? strength / s_total : 0.0;
  return f;
}

std::array<double, kNgtdmCount> ngtdm_features(const DiscretizedRoi& disc) {
  check_roi(disc);
  return ngtdm_features_from_table(ngtdm_table(disc));
}

double maximum_diameter(const RoiMask& mask) {
  std::vector<std::pair<int, int>> boundary;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.contains(x, y)) continue;
      if (!mask.contains(x - 1, y) || !mask.contains(x + 1, y) || !mask.contains(x, y - 1) ||
          !mask.contains(x, y + 1)) {
        boundary.emplace_back(x, y);
      }
    }
  }
  long best = 0;
  for (std::size_t a = 0; a < boundary.size(); ++a) {
    for (std::size_t b = a + 1; b < boundary.size(); ++b) {
      const long dx = boundary[a].first - boundary[b].first;
      const long dy = boundary[a].second - boundary[b].second;
      best = std::max(best, dx * dx + dy * dy);
    }
  }
  return std::sqrt(static_cast<double>(best));
}

std::array<double, kShapeCount> shape2d_features(const RoiMask& mask) {
  const std::size_t n = mask.count();
  if (n == 0) throw ContractError("shape2d_features: empty ROI mask");
  double perimeter = 0, sx = 0, sy = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.contains(x, y)) continue;
      perimeter += !mask.contains(x - 1, y) + !mask.contains(x + 1, y) +
                   !mask.contains(x, y - 1) + !mask.contains(x, y + 1);
      sx += x;
      sy += y;
    }
  }
  const double area = static_cast<double>(n);
  const double mx = sx / area, my = sy / area;
  double cxx = 0, cyy = 0, cxy = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.contains(x, y)) continue;
      cxx += (x - mx) * (x - mx);
      cyy += (y - my) * (y - my);
      cxy += (x - mx) * (y - my);
    }
  }
  cxx /= area;
  cyy /= area;
  cxy /= area;
  const double half_trace = 0.5 * (cxx + cyy);
  const double disc = std::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
  const double major = std::max(0.0, half_trace + disc);
  const double minor = std::max(0.0, half_trace - disc);
  const double elongation = major > 0 ? std::sqrt(minor / major) : 1.0;

  return {area,
          perimeter,
          perimeter / area,
          2.0 * std::sqrt(std::numbers::pi * area) / perimeter,
          maximum_diameter(mask),
          4.0 * std::sqrt(major),
          4.0 * std::sqrt(minor),
          elongation,
          area};
}

RadiomicsVector extract_radiomics(const GrayImage& image, const std::optional<BoundingBox>& bbox,
                                  const RadiomicsConfig& config) {
  if (image.empty()) throw ContractError("extract_radiomics: empty image");
  const RoiMask mask = data::roi_mask_from_bbox(image, bbox);
  const DiscretizedRoi disc = discretize(image, mask, config.bins);

  RadiomicsVector out;
  auto it = out.values.begin();
  auto append = [&](const auto& block) { it = std::copy(block.begin(), block.end(), it); };
  append(shape2d_features(mask));
  append(first_order_features(image, mask, config.bins));
  append(glcm_features(disc));
  const RunZoneFeatures rz = run_zone_features(disc);
  append(rz.glrlm);
  append(rz.glszm);
  append(ngtdm_features(disc));
  append(rz.gldm);
  return out;
}

}  // namespace radiocon::radiomics
