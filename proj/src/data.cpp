#include "radiocon/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "radiocon/tensor.hpp"

namespace radiocon {

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // splitmix64 finaliser over the mixed state
  std::uint64_t z = root ^ (h + 0x9e3779b97f4a7c15ull + (root << 6) + (root >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t root, std::string_view label) {
  return std::mt19937_64(derive_seed(root, label));
}

}  // namespace radiocon

namespace radiocon::data {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_coord(const std::string& text, std::size_t line_no, const char* what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw DataError("manifest line " + std::to_string(line_no) + ": bad " + what + " '" + text + "'");
  }
  return static_cast<int>(std::lround(v));
}

std::optional<std::filesystem::path> find_image(const std::filesystem::path& dir,
                                                const std::string& id) {
  for (const char* ext : {".png", ".pgm"}) {
    auto p = dir / (id + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

ManifestLoad load_manifest(const std::filesystem::path& csv_path,
                           const std::filesystem::path& image_dir) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open manifest " + csv_path.string());

  struct Entry {
    Label label = Label::normal;
    std::optional<BoundingBox> bbox;
  };
  std::vector<std::string> order;
  std::map<std::string, Entry> entries;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "patientId,x,y,width,height,Target") {
        throw DataError("manifest line 1: expected header patientId,x,y,width,height,Target");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) {
      throw DataError("manifest line " + std::to_string(line_no) + ": expected 6 fields, got " +
                      std::to_string(f.size()));
    }
    if (f[0].empty()) throw DataError("manifest line " + std::to_string(line_no) + ": empty patientId");
    if (f[5] != "0" && f[5] != "1") {
      throw DataError("manifest line " + std::to_string(line_no) + ": Target must be 0 or 1");
    }
    const bool coords_empty = f[1].empty() && f[2].empty() && f[3].empty() && f[4].empty();
    const bool coords_full = !f[1].empty() && !f[2].empty() && !f[3].empty() && !f[4].empty();
    if (!coords_empty && !coords_full) {
      throw DataError("manifest line " + std::to_string(line_no) + ": partial box coordinates");
    }

    auto [it, inserted] = entries.try_emplace(f[0]);
    if (inserted) order.push_back(f[0]);
    Entry& e = it->second;
    if (f[5] == "1") e.label = Label::pneumonia;
    if (f[5] == "1" && coords_full) {
      BoundingBox box{parse_coord(f[1], line_no, "x"), parse_coord(f[2], line_no, "y"),
                      parse_coord(f[3], line_no, "width"), parse_coord(f[4], line_no, "height")};
      if (box.w < 1 || box.h < 1) {
        throw DataError("manifest line " + std::to_string(line_no) + ": box extent must be >= 1");
      }
      e.bbox = e.bbox ? box_union(*e.bbox, box) : box;
    }
  }
  if (line_no == 0) throw DataError("manifest " + csv_path.string() + " is empty");

  ManifestLoad result;
  for (const auto& id : order) {
    auto path = find_image(image_dir, id);
    if (!path) {
      result.errors.push_back(id + ": no image " + id + ".png or " + id + ".pgm in " +
                              image_dir.string());
      continue;
    }
    try {
      Sample s;
      s.id = id;
      s.image = read_image(*path);
      s.label = entries[id].label;
      s.bbox = entries[id].bbox;
      if (s.bbox && !s.bbox->intersects(s.image.width, s.image.height)) {
        result.errors.push_back(id + ": bounding box lies outside the image");
        continue;
      }
      result.samples.push_back(std::move(s));
    } catch (const IoError& e) {
      result.errors.push_back(id + ": " + e.what());
    }
  }
  return result;
}

void write_manifest(const std::filesystem::path& csv_path, const std::vector<Sample>& samples) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + csv_path.string());
  out << "patientId,x,y,width,height,Target\n";
  for (const auto& s : samples) {
    out << s.id << ',';
    if (s.bbox) {
      out << s.bbox->x << ',' << s.bbox->y << ',' << s.bbox->w << ',' << s.bbox->h;
    } else {
      out << ",,,";
    }
    out << ',' << static_cast<int>(s.label) << '\n';
  }
}

radiomics::RoiMask roi_mask_from_bbox(const GrayImage& image,
                                      const std::optional<BoundingBox>& bbox) {
  radiomics::RoiMask mask;
  mask.width = image.width;
  mask.height = image.height;
  if (!bbox) {
    mask.bits.assign(image.pixels.size(), 1);
    return mask;
  }
  mask.bits.assign(image.pixels.size(), 0);
  const int x0 = std::max(bbox->x, 0);
  const int y0 = std::max(bbox->y, 0);
  const int x1 = std::min(bbox->right(), image.width);
  const int y1 = std::min(bbox->bottom(), image.height);
  if (x1 <= x0 || y1 <= y0) {
    throw ContractError("bounding box (" + std::to_string(bbox->x) + "," + std::to_string(bbox->y) +
                        "," + std::to_string(bbox->w) + "," + std::to_string(bbox->h) +
                        ") has no area inside the image");
  }
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) mask.bits[static_cast<std::size_t>(y) * image.width + x] = 1;
  }
  return mask;
}

DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t seed) {
  const std::size_t n = samples.size();
  if (n < 4) throw DataError("split_dataset needs at least 4 samples, got " + std::to_string(n));
  auto rng = make_rng(seed, "split");
  const auto train_total = static_cast<std::size_t>(std::lround(0.75 * static_cast<double>(n)));

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<int>(samples[i].label)].push_back(i);

  DatasetSplit split;
  split.seed = seed;
  split.stratified = by_class[0].size() >= 2 && by_class[1].size() >= 2;

  std::vector<std::uint8_t> in_train(n, 0);
  if (!split.stratified) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    for (std::size_t k = 0; k < train_total; ++k) in_train[all[k]] = 1;
  } else {
    // Largest-remainder allocation of the train quota across the classes.
    std::array<std::size_t, 2> quota{};
    std::array<double, 2> remainder{};
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      const double exact = 0.75 * static_cast<double>(by_class[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      remainder[c] = exact - std::floor(exact);
      assigned += quota[c];
    }
    while (assigned < train_total) {
      const int c = remainder[1] > remainder[0] ? 1 : 0;
      ++quota[c];
      remainder[c] = -1.0;
      ++assigned;
    }
    // Keep at least one sample of each class on both sides.
    for (int c = 0; c < 2; ++c) {
      const int other = 1 - c;
      if (quota[c] == by_class[c].size() && quota[other] + 1 < by_class[other].size()) {
        --quota[c];
        ++quota[other];
      }
      if (quota[c] == 0 && quota[other] > 1) {
        ++quota[c];
        --quota[other];
      }
    }
    for (int c = 0; c < 2; ++c) {
      auto ids = by_class[c];
      std::shuffle(ids.begin(), ids.end(), rng);
      for (std::size_t k = 0; k < quota[c]; ++k) in_train[ids[k]] = 1;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train_ids : split.test_ids).push_back(samples[i].id);
  }
  return split;
}

std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& ids,
                                                   std::size_t batch_size,
                                                   std::uint64_t epoch_seed, BatchMode mode) {
  if (batch_size < 1) throw ParameterError("make_batches: batch_size must be >= 1");
  if (mode == BatchMode::contrastive && batch_size < 2) {
    throw ParameterError("make_batches: contrastive batches need batch_size >= 2");
  }
  std::vector<std::string> order = ids;
  std::mt19937_64 rng(epoch_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::string>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    if (mode == BatchMode::contrastive && end - start < batch_size) break;
    batches.emplace_back(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
  }
  return batches;
}

namespace {

// Smooth value noise: bilinear interpolation of a random lattice, summed
// over octaves with halving amplitude.
std::vector<double> value_noise(int res, std::mt19937_64& rng) {
  std::vector<double> field(static_cast<std::size_t>(res) * res, 0.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double amplitude = 1.0;
  for (int cells = 2; cells <= 16; cells *= 2) {
    const int lattice = cells + 1;
    std::vector<double> grid(static_cast<std::size_t>(lattice) * lattice);
    for (auto& g : grid) g = unit(rng);
    for (int y = 0; y < res; ++y) {
      const double fy = static_cast<double>(y) / res * cells;
      const int gy = static_cast<int>(fy);
      const double ty = fy - gy;
      for (int x = 0; x < res; ++x) {
        const double fx = static_cast<double>(x) / res * cells;
        const int gx = static_cast<int>(fx);
        const double tx = fx - gx;
        auto at = [&](int xx, int yy) { return grid[static_cast<std::size_t>(yy) * lattice + xx]; };
        const double top = at(gx, gy) * (1 - tx) + at(gx + 1, gy) * tx;
        const double bot = at(gx, gy + 1) * (1 - tx) + at(gx + 1, gy + 1) * tx;
        field[static_cast<std::size_t>(y) * res + x] += amplitude * (top * (1 - ty) + bot * ty);
      }
    }
    amplitude *= 0.5;
  }
  return field;
}

}  // namespace

std::vector<Sample> generate_synthetic_samples(const SyntheticOptions& options) {
  if (options.count < 8) throw ParameterError("synthetic dataset needs n >= 8");
  if (options.resolution < 32) throw ParameterError("synthetic dataset needs resolution >= 32");
  const int res = options.resolution;
  const double r = res;

  // Exactly half positive, in seeded order.
  std::vector<Label> labels(options.count, Label::normal);
  std::fill(labels.begin(), labels.begin() + static_cast<long>(options.count / 2), Label::pneumonia);
  auto label_rng = make_rng(options.seed, "synthetic/labels");
  std::shuffle(labels.begin(), labels.end(), label_rng);

  std::vector<Sample> samples;
  samples.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%04zu", i);
    auto rng = make_rng(options.seed, std::string("synthetic/") + id);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> grain(0.0, 6.0);

    std::vector<double> img = value_noise(res, rng);
    for (auto& v : img) v = 120.0 + 28.0 * v;

    // Two darker lung fields with jittered placement.
    struct Ellipse {
      double cx, cy, rx, ry;
    };
    std::array<Ellipse, 2> lungs{};
    for (int side = 0; side < 2; ++side) {
      lungs[side] = {r * (side == 0 ? 0.3 : 0.7) + (unit(rng) - 0.5) * 0.06 * r,
                     r * 0.5 + (unit(rng) - 0.5) * 0.06 * r, r * (0.15 + 0.04 * unit(rng)),
                     r * (0.3 + 0.06 * unit(rng))};
    }
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        for (const auto& e : lungs) {
          const double d = std::hypot((x + 0.5 - e.cx) / e.rx, (y + 0.5 - e.cy) / e.ry);
          if (d < 1.0) img[static_cast<std::size_t>(y) * res + x] -= 35.0 * (1.0 - d * d);
        }
      }
    }

    Sample s;
    s.id = id;
    s.label = labels[i];
    if (s.label == Label::pneumonia) {
      // Lesion semi-axes >= 4 px, so its box is at least 8x8.
      const double rx = 4.0 + unit(rng) * (r / 8.0 - 4.0);
      const double ry = 4.0 + unit(rng) * (r / 8.0 - 4.0);
      const auto& lung = lungs[unit(rng) < 0.5 ? 0 : 1];
      const double cx = std::clamp(lung.cx + (unit(rng) - 0.5) * lung.rx, rx + 1.0, r - rx - 1.0);
      const double cy = std::clamp(lung.cy + (unit(rng) - 0.5) * lung.ry, ry + 1.0, r - ry - 1.0);
      int x0 = res, y0 = res, x1 = -1, y1 = -1;
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
          const double d = std::hypot((x + 0.5 - cx) / rx, (y + 0.5 - cy) / ry);
          if (d >= 1.0) continue;
          // Soft-edged: full contrast at the centre falling to zero at the rim.
          const double falloff = 1.0 - d * d;
          img[static_cast<std::size_t>(y) * res + x] += options.lesion_contrast * falloff * falloff;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
      s.bbox = BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    }

    s.image = GrayImage(res, res);
    for (std::size_t k = 0; k < img.size(); ++k) {
      s.image.pixels[k] = static_cast<std::uint8_t>(std::clamp(std::lround(img[k] + grain(rng)), 0l, 255l));
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> generate_synthetic_dataset(const SyntheticOptions& options,
                                               const std::filesystem::path& dir) {
  auto samples = generate_synthetic_samples(options);
  std::filesystem::create_directories(dir / "images");
  for (const auto& s : samples) write_png(dir / "images" / (s.id + ".png"), s.image);
  write_manifest(dir / "manifest.csv", samples);
  return samples;
}

}  // namespace radiocon::data
