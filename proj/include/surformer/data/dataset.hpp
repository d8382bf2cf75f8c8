#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "surformer/core/error.hpp"
#include "surformer/core/rng.hpp"
#include "surformer/data/augment.hpp"
#include "surformer/data/generator.hpp"
#include "surformer/tactile/features.hpp"

namespace surformer::data {

enum class VisionMode { Embeddings, Images };
enum class Provenance { Original, Augmented };

struct PairedSample {
  tactile::GrayImage tactile;
  RgbImage vision_image;          // populated in image mode
  std::vector<double> embedding;  // populated in embedding mode
  int label = 0;
  Provenance provenance = Provenance::Original;
};

struct GenerateOptions {
  std::array<std::size_t, kNumClasses> counts = kInitialClassCounts;
  bool balance = false;
  std::size_t target_per_class = kBalancedPerClass;
  VisionMode vision = VisionMode::Embeddings;
  std::uint64_t seed = 42;
  std::size_t image_size = 224;
  std::size_t embedding_dim = 2048;
  std::array<ClassTextureProfile, kNumClasses> profiles = default_profiles();
  AugmentPolicy tactile_policy = AugmentPolicy::tactile();
  AugmentPolicy vision_policy = AugmentPolicy::vision();

  void validate() const {
    if (image_size < 8) throw ValueError("gen-data: image size must be >= 8");
    if (balance) {
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] == 0) throw ValueError("gen-data: class " + std::to_string(c) + " is empty");
        if (target_per_class < counts[c]) {
          throw ValueError("balance: target " + std::to_string(target_per_class) +
                           " below class " + std::to_string(c) + " count " +
                           std::to_string(counts[c]));
        }
      }
    }
  }
};

namespace detail {

// Per-sample streams: originals and augmentations of every (class, index)
// slot draw from disjoint deterministic streams of the dataset seed.
inline std::uint64_t sample_stream(bool augmented, std::size_t label, std::size_t index) {
  return (static_cast<std::uint64_t>(augmented ? 1 : 0) << 56) |
         (static_cast<std::uint64_t>(label) << 48) | static_cast<std::uint64_t>(index);
}

inline PairedSample make_original(std::size_t label, std::size_t index,
                                  const GenerateOptions& opt,
                                  const EmbeddingGenerator* embgen) {
  const std::uint64_t base = Rng::mix(opt.seed, sample_stream(false, label, index));
  Rng rng_t = Rng::fork(base, 0);
  Rng rng_v = Rng::fork(base, 1);
  PairedSample s;
  s.label = static_cast<int>(label);
  s.provenance = Provenance::Original;
  s.tactile = generate_tactile_image(opt.profiles[label], opt.image_size, opt.image_size, rng_t);
  if (opt.vision == VisionMode::Images) {
    s.vision_image = generate_vision_image(s.label, opt.profiles[label], opt.image_size,
                                           opt.image_size, rng_v);
  } else {
    s.embedding = embgen->sample(s.label, rng_v);
  }
  return s;
}

/// Augmented slot `index` of a class: the tactile frame is an augmentation of
/// a round-robin source original; the vision side is augmented independently
/// (image mode) or redrawn from the class embedding distribution (embedding
/// mode), matching the separate per-modality policies.
inline PairedSample make_augmented(const PairedSample& source, std::size_t label,
                                   std::size_t index, const GenerateOptions& opt,
                                   const EmbeddingGenerator* embgen) {
  const std::uint64_t base = Rng::mix(opt.seed, sample_stream(true, label, index));
  Rng rng_t = Rng::fork(base, 0);
  Rng rng_v = Rng::fork(base, 1);
  PairedSample s;
  s.label = static_cast<int>(label);
  s.provenance = Provenance::Augmented;
  s.tactile = augment_image(source.tactile, opt.tactile_policy, rng_t);
  if (opt.vision == VisionMode::Images) {
    s.vision_image = augment_image(source.vision_image, opt.vision_policy, rng_v);
  } else {
    s.embedding = embgen->sample(s.label, rng_v);
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Image / embedding blob I/O (PGM P5, PPM P6, raw little-endian embeddings).
// ---------------------------------------------------------------------------

namespace detail {

inline unsigned char quantize(double v) {
  const double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<unsigned char>(q);
}

}  // namespace detail

inline void write_pgm(const std::string& path, const tactile::GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_pgm: cannot open " + path);
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::string bytes(img.size(), '\0');
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<char>(detail::quantize(img.pixels[i]));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write_pgm: write failed for " + path);
}

inline tactile::GrayImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_pgm: cannot open " + path);
  std::string magic;
  std::size_t w = 0, h = 0;
  int maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255) throw DataError("read_pgm: unsupported format " + path);
  is.get();  // single whitespace after header
  tactile::GrayImage img(h, w);
  std::string bytes(w * h, '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw DataError("read_pgm: truncated " + path);
  for (std::size_t i = 0; i < img.size(); ++i) {
    img.pixels[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / 255.0;
  }
  return img;
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_ppm: cannot open " + path);
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::string bytes(img.pixels.size(), '\0');
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    bytes[i] = static_cast<char>(detail::quantize(img.pixels[i]));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write_ppm: write failed for " + path);
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_ppm: cannot open " + path);
  std::string magic;
  std::size_t w = 0, h = 0;
  int maxval = 0;
  is >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255) throw DataError("read_ppm: unsupported format " + path);
  is.get();
  RgbImage img(h, w);
  std::string bytes(w * h * 3, '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw DataError("read_ppm: truncated " + path);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / 255.0;
  }
  return img;
}

inline void write_embedding_blob(const std::string& path, const std::vector<double>& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("write_embedding: cannot open " + path);
  os.write("EMB1", 4);
  const auto dim = static_cast<std::uint32_t>(e.size());
  char head[4];
  for (int i = 0; i < 4; ++i) head[i] = static_cast<char>((dim >> (8 * i)) & 0xff);
  os.write(head, 4);
  std::string bytes;
  bytes.reserve(e.size() * 8);
  for (double v : e) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write_embedding: write failed for " + path);
}

inline std::vector<double> read_embedding_blob(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_embedding: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "EMB1") {
    throw DataError("read_embedding: bad magic in " + path);
  }
  char head[4];
  is.read(head, 4);
  std::uint32_t dim = 0;
  for (int i = 0; i < 4; ++i) {
    dim |= static_cast<std::uint32_t>(static_cast<unsigned char>(head[i])) << (8 * i);
  }
  std::vector<double> e(dim);
  std::string bytes(static_cast<std::size_t>(dim) * 8, '\0');
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw DataError("read_embedding: truncated " + path);
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    std::memcpy(&e[i], &bits, 8);
  }
  return e;
}

// ---------------------------------------------------------------------------
// In-memory generation and balancing (the archive writer streams the same
// per-sample functions to disk).
// ---------------------------------------------------------------------------

/// Generates the unbalanced (or, with opt.balance, the fully balanced)
/// dataset in memory. Deterministic in (seed, options).
inline std::vector<PairedSample> generate_dataset(const GenerateOptions& opt) {
  opt.validate();
  std::optional<EmbeddingGenerator> embgen;
  if (opt.vision == VisionMode::Embeddings) {
    embgen.emplace(opt.embedding_dim);
  }
  const EmbeddingGenerator* gen = embgen ? &*embgen : nullptr;
  std::vector<PairedSample> out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (std::size_t i = 0; i < opt.counts[c]; ++i) {
      out.push_back(detail::make_original(c, i, opt, gen));
    }
    if (opt.balance) {
      const std::size_t n_orig = opt.counts[c];
      const std::size_t class_start = out.size() - n_orig;
      for (std::size_t i = n_orig; i < opt.target_per_class; ++i) {
        const PairedSample& source = out[class_start + (i - n_orig) % n_orig];
        out.push_back(detail::make_augmented(source, c, i, opt, gen));
      }
    }
  }
  return out;
}

/// Appends augmented copies until each class reaches the target; originals
/// are never mutated or dropped.
inline void balance_by_augmentation(std::vector<PairedSample>& dataset,
                                    std::size_t target_per_class,
                                    const GenerateOptions& opt) {
  std::array<std::vector<std::size_t>, kNumClasses> originals;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].provenance == Provenance::Original) {
      originals[static_cast<std::size_t>(dataset[i].label)].push_back(i);
    }
  }
  std::array<std::size_t, kNumClasses> totals{};
  for (const PairedSample& s : dataset) ++totals[static_cast<std::size_t>(s.label)];
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (originals[c].empty()) throw ValueError("balance: class " + std::to_string(c) + " is empty");
    if (totals[c] > target_per_class) {
      throw ValueError("balance: target " + std::to_string(target_per_class) +
                       " below class " + std::to_string(c) + " count " +
                       std::to_string(totals[c]));
    }
  }
  std::optional<EmbeddingGenerator> embgen;
  if (opt.vision == VisionMode::Embeddings) embgen.emplace(opt.embedding_dim);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t n_orig = originals[c].size();
    for (std::size_t i = totals[c]; i < target_per_class; ++i) {
      const PairedSample& source = dataset[originals[c][(i - totals[c]) % n_orig]];
      dataset.push_back(detail::make_augmented(source, c, i, opt,
                                               embgen ? &*embgen : nullptr));
    }
  }
}

// ---------------------------------------------------------------------------
// Archive: directory with a text manifest plus per-sample blobs named
// <class>/<index>.<ext>.
// ---------------------------------------------------------------------------

struct SampleInfo {
  int label = 0;
  Provenance provenance = Provenance::Original;
  std::string tactile_path;
  std::string vision_path;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  VisionMode vision = VisionMode::Embeddings;
  std::size_t image_size = 224;
  std::size_t embedding_dim = 2048;
  std::array<std::size_t, kNumClasses> class_totals{};
  std::vector<SampleInfo> samples;
};

namespace detail {

inline std::string blob_name(std::size_t label, std::size_t index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s/%06zu.%s", kClassNames[label], index, ext);
  return buf;
}

inline void append_manifest_policy(std::ostream& os, const char* name,
                                   const AugmentPolicy& p) {
  os << "policy " << name << ' ' << p.rotation_deg << ' ' << p.shift_frac << ' '
     << p.zoom_range << ' ' << (p.h_flip ? 1 : 0) << ' ' << (p.v_flip ? 1 : 0) << ' '
     << p.brightness_lo << ' ' << p.brightness_hi << ' ' << p.channel_shift << "\n";
}

}  // namespace detail

/// Streams a full archive to `dir`: one sample in memory at a time, so paper
/// scale (224x224, thousands of frames) stays well within desktop RAM.
inline void generate_archive(const std::string& dir, const GenerateOptions& opt) {
  namespace fs = std::filesystem;
  opt.validate();
  fs::create_directories(dir);
  for (const char* name : kClassNames) fs::create_directories(fs::path(dir) / name);

  std::optional<EmbeddingGenerator> embgen;
  if (opt.vision == VisionMode::Embeddings) embgen.emplace(opt.embedding_dim);
  const EmbeddingGenerator* gen = embgen ? &*embgen : nullptr;

  std::ostringstream manifest;
  manifest << "SFDATA 1\n";
  manifest << "seed " << opt.seed << "\n";
  manifest << "vision " << (opt.vision == VisionMode::Embeddings ? "embeddings" : "images") << "\n";
  manifest << "image_size " << opt.image_size << "\n";
  manifest << "embedding_dim " << opt.embedding_dim << "\n";
  manifest << std::setprecision(17);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const ClassTextureProfile& p = opt.profiles[c];
    manifest << "profile " << c << ' ' << p.base_intensity << ' ' << p.noise_std << ' '
             << p.spatial_frequency << ' ' << p.blob_count << ' ' << p.blob_pressure << "\n";
  }
  detail::append_manifest_policy(manifest, "tactile", opt.tactile_policy);
  detail::append_manifest_policy(manifest, "vision", opt.vision_policy);

  const char* vision_ext = opt.vision == VisionMode::Embeddings ? "emb" : "ppm";
  std::size_t total = 0;
  std::ostringstream rows;
  std::array<std::size_t, kNumClasses> class_totals{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t n_orig = opt.counts[c];
    const std::size_t n_total = opt.balance ? opt.target_per_class : n_orig;
    class_totals[c] = n_total;
    for (std::size_t i = 0; i < n_total; ++i) {
      PairedSample s;
      if (i < n_orig) {
        s = detail::make_original(c, i, opt, gen);
      } else {
        // Regenerate the round-robin source deterministically instead of
        // holding class images in memory.
        const std::size_t src = (i - n_orig) % n_orig;
        const PairedSample source = detail::make_original(c, src, opt, gen);
        s = detail::make_augmented(source, c, i, opt, gen);
      }
      const std::string t_name = detail::blob_name(c, i, "pgm");
      const std::string v_name = detail::blob_name(c, i, vision_ext);
      write_pgm((fs::path(dir) / t_name).string(), s.tactile);
      if (opt.vision == VisionMode::Embeddings) {
        write_embedding_blob((fs::path(dir) / v_name).string(), s.embedding);
      } else {
        write_ppm((fs::path(dir) / v_name).string(), s.vision_image);
      }
      rows << total << ' ' << c << ' '
           << (s.provenance == Provenance::Original ? "original" : "augmented") << ' '
           << t_name << ' ' << v_name << "\n";
      ++total;
    }
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    manifest << "class " << c << ' ' << kClassNames[c] << ' ' << class_totals[c] << "\n";
  }
  manifest << "samples " << total << "\n";
  manifest << rows.str();

  std::ofstream os(fs::path(dir) / "manifest");
  if (!os) throw IoError("gen-data: cannot write manifest in " + dir);
  os << manifest.str();
  if (!os) throw IoError("gen-data: manifest write failed in " + dir);
}

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / "manifest");
    if (!is) throw IoError("dataset: no manifest in " + dir);
    std::string tag;
    int version = 0;
    is >> tag >> version;
    if (tag != "SFDATA" || version != 1) {
      throw DataError("dataset: unrecognized manifest in " + dir);
    }
    std::string key;
    while (is >> key) {
      if (key == "seed") {
        is >> manifest_.seed;
      } else if (key == "vision") {
        std::string mode;
        is >> mode;
        manifest_.vision = mode == "images" ? VisionMode::Images : VisionMode::Embeddings;
      } else if (key == "image_size") {
        is >> manifest_.image_size;
      } else if (key == "embedding_dim") {
        is >> manifest_.embedding_dim;
      } else if (key == "profile" || key == "policy" || key == "class") {
        std::string rest;
        std::getline(is, rest);
        if (key == "class") {
          std::istringstream ls(rest);
          std::size_t c = 0, n = 0;
          std::string name;
          ls >> c >> name >> n;
          manifest_.class_totals[c] = n;
        }
      } else if (key == "samples") {
        std::size_t n = 0;
        is >> n;
        manifest_.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t idx = 0;
          int label = 0;
          std::string prov, t_path, v_path;
          is >> idx >> label >> prov >> t_path >> v_path;
          if (!is) throw DataError("dataset: truncated sample table in " + dir);
          manifest_.samples[i] = {label,
                                  prov == "original" ? Provenance::Original
                                                     : Provenance::Augmented,
                                  t_path, v_path};
        }
        break;
      }
    }
  }

  const DatasetManifest& manifest() const { return manifest_; }
  std::size_t size() const { return manifest_.samples.size(); }
  VisionMode vision_mode() const { return manifest_.vision; }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(size());
    for (const SampleInfo& s : manifest_.samples) out.push_back(s.label);
    return out;
  }

  tactile::GrayImage load_tactile(std::size_t i) const {
    return read_pgm(path(manifest_.samples.at(i).tactile_path));
  }

  std::vector<double> load_embedding(std::size_t i) const {
    const SampleInfo& s = manifest_.samples.at(i);
    if (manifest_.vision == VisionMode::Embeddings) {
      return read_embedding_blob(path(s.vision_path));
    }
    ImageEmbedder embedder(manifest_.embedding_dim);
    return embedder.embed(read_ppm(path(s.vision_path)));
  }

  RgbImage load_vision_image(std::size_t i) const {
    if (manifest_.vision != VisionMode::Images) {
      throw StateError("dataset: archive holds embeddings, not vision images");
    }
    return read_ppm(path(manifest_.samples.at(i).vision_path));
  }

  /// [N, embedding_dim] matrix of all vision embeddings. In image mode the
  /// frames pass through the fixed seeded featurizer.
  Tensor all_embeddings() const {
    Tensor x({size(), manifest_.embedding_dim});
    if (manifest_.vision == VisionMode::Embeddings) {
      for (std::size_t i = 0; i < size(); ++i) {
        const std::vector<double> e = read_embedding_blob(path(manifest_.samples[i].vision_path));
        if (e.size() != manifest_.embedding_dim) {
          throw DataError("dataset: embedding " + std::to_string(i) + " has dim " +
                          std::to_string(e.size()));
        }
        for (std::size_t j = 0; j < e.size(); ++j) x.at(i, j) = e[j];
      }
    } else {
      ImageEmbedder embedder(manifest_.embedding_dim);
      for (std::size_t i = 0; i < size(); ++i) {
        const std::vector<double> e = embedder.embed(read_ppm(path(manifest_.samples[i].vision_path)));
        for (std::size_t j = 0; j < e.size(); ++j) x.at(i, j) = e[j];
      }
    }
    return x;
  }

  /// [N, 10] engineered tactile features for every sample.
  Tensor all_tactile_features(const tactile::FeatureConfig& cfg = {}) const {
    Tensor x({size(), 10});
    for (std::size_t i = 0; i < size(); ++i) {
      const auto f = tactile::extract_all_features(load_tactile(i), cfg);
      for (std::size_t j = 0; j < 10; ++j) x.at(i, j) = f[j];
    }
    return x;
  }

  std::vector<std::string> sample_ids() const {
    std::vector<std::string> out;
    out.reserve(size());
    for (const SampleInfo& s : manifest_.samples) {
      std::string id = s.tactile_path;
      const std::size_t dot = id.rfind('.');
      if (dot != std::string::npos) id.resize(dot);
      out.push_back(id);
    }
    return out;
  }

 private:
  std::string path(const std::string& rel) const {
    return (std::filesystem::path(dir_) / rel).string();
  }

  std::string dir_;
  DatasetManifest manifest_;
};

// ---------------------------------------------------------------------------
// Stratified splitting.
// ---------------------------------------------------------------------------

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Per-class seeded shuffle then proportional slicing. Fraction order is
/// (train, test) for two-way and (train, val, test) for three-way splits.
inline DatasetSplit stratified_split(const std::vector<int>& labels,
                                     const std::vector<double>& fractions,
                                     std::uint64_t seed) {
  if (fractions.size() != 2 && fractions.size() != 3) {
    throw ValueError("split: need 2 or 3 fractions");
  }
  double sum = 0.0;
  for (double f : fractions) sum += f;
  if (std::fabs(sum - 1.0) > 1e-9) throw ValueError("split: fractions must sum to 1");

  std::size_t n_classes = 0;
  for (int l : labels) n_classes = std::max(n_classes, static_cast<std::size_t>(l) + 1);
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  DatasetSplit split;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < fractions.size()) {
      throw DataError("split: class " + std::to_string(c) + " has only " +
                      std::to_string(members.size()) + " samples for " +
                      std::to_string(fractions.size()) + " splits");
    }
    Rng rng = Rng::fork(seed, 0x5117 + c);
    rng.shuffle(members);
    const auto n = static_cast<double>(members.size());
    std::vector<std::size_t> bounds{0};
    double cum = 0.0;
    for (double f : fractions) {
      cum += f;
      bounds.push_back(static_cast<std::size_t>(std::llround(n * cum)));
    }
    bounds.back() = members.size();
    auto slice = [&](std::size_t part) {
      return std::vector<std::size_t>(members.begin() + bounds[part],
                                      members.begin() + bounds[part + 1]);
    };
    auto append = [](std::vector<std::size_t>& dst, std::vector<std::size_t>&& src) {
      dst.insert(dst.end(), src.begin(), src.end());
    };
    append(split.train, slice(0));
    if (fractions.size() == 2) {
      append(split.test, slice(1));
    } else {
      append(split.val, slice(1));
      append(split.test, slice(2));
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace surformer::data
