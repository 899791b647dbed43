#pragma once

#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>

#include "bnn/error.hpp"
#include "bnn/io.hpp"
#include "bnn/modelio.hpp"
#include "bnn/transfer.hpp"

namespace bnn {

/// Text manifest describing the software head that plugs onto an exported
/// extractor blob. One `key=value` per line; '#' starts a comment.
struct HeadManifest {
  std::uint32_t format_version = 1;
  std::string extractor_blob;  // file name, relative to the manifest
  std::string extractor_fingerprint;
  Shape input_shape;   // per sample, e.g. 1x28x28
  Shape feature_shape; // per sample
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  HeadKind head_kind = HeadKind::kFloat;
  std::size_t split_index = 0;
  bool folded_shifts = false;

  std::string to_text() const {
    std::ostringstream os;
    os << "# bnn extractor bundle\n"
       << "format_version=" << format_version << '\n'
       << "extractor_blob=" << extractor_blob << '\n'
       << "extractor_fingerprint=" << extractor_fingerprint << '\n'
       << "input_shape=" << shape_string(input_shape) << '\n'
       << "feature_shape=" << shape_string(feature_shape) << '\n'
       << "feature_dim=" << feature_dim << '\n'
       << "class_count=" << class_count << '\n'
       << "head_kind=" << head_kind_name(head_kind) << '\n'
       << "split_index=" << split_index << '\n'
       << "folded_shifts=" << (folded_shifts ? 1 : 0) << '\n';
    return os.str();
  }

  static HeadManifest parse(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw FormatError(FormatErrc::kMalformed, "manifest line without '=': " + line);
      }
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) throw FormatError(FormatErrc::kMalformed, std::string("manifest lacks ") + key);
      return it->second;
    };
    auto number = [&](const char* key) -> std::size_t {
      const std::string& v = get(key);
      std::size_t out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size()) {
        throw FormatError(FormatErrc::kMalformed, std::string("manifest ") + key + " is not a number");
      }
      return out;
    };
    auto shape = [&](const char* key) {
      Shape s;
      for (auto part : detail::split(get(key), 'x')) {
        std::size_t v = 0;
        const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || p != part.data() + part.size() || v == 0) {
          throw FormatError(FormatErrc::kMalformed, std::string("manifest ") + key + " is not a shape");
        }
        s.push_back(v);
      }
      return s;
    };
    HeadManifest m;
    m.format_version = static_cast<std::uint32_t>(number("format_version"));
    if (m.format_version != 1) {
      throw FormatError(FormatErrc::kVersionMismatch, "manifest version " + std::to_string(m.format_version));
    }
    m.extractor_blob = get("extractor_blob");
    m.extractor_fingerprint = get("extractor_fingerprint");
    m.input_shape = shape("input_shape");
    m.feature_shape = shape("feature_shape");
    m.feature_dim = number("feature_dim");
    m.class_count = number("class_count");
    const std::string& kind = get("head_kind");
    if (kind == "binary") m.head_kind = HeadKind::kBinary;
    else if (kind == "float") m.head_kind = HeadKind::kFloat;
    else throw FormatError(FormatErrc::kMalformed, "manifest head_kind " + kind);
    m.split_index = number("split_index");
    m.folded_shifts = number("folded_shifts") != 0;
    return m;
  }
};

/// Frozen-extractor blob plus the manifest describing its head interface.
struct ExtractorBundle {
  Bytes blob;
  HeadManifest manifest;
};

/// Packs the extractor into an inference blob. With `fold_shifts`, every
/// batch norm is replaced by its power-of-two shift table.
inline ExtractorBundle export_extractor(const SplitModel& split, bool fold_shifts,
                                        std::string blob_name = "extractor.bnnx") {
  if (split.head.empty()) {
    throw FormatError(FormatErrc::kMalformed, "cannot describe a head with zero layers");
  }
  Model<float> frozen = split.extractor;
  frozen.clear_cache();
  if (fold_shifts) {
    for (auto& layer : frozen.layers())
      if (auto* bn = std::get_if<BatchNormLayer<float>>(&layer); bn && !bn->shift_mode)
        enable_shift_mode(*bn);
  }
  ExtractorBundle b;
  b.blob = encode_extractor(frozen);
  HeadManifest& m = b.manifest;
  m.extractor_blob = std::move(blob_name);
  m.extractor_fingerprint = sha256_hex(b.blob);
  m.input_shape = split.sample_shape;
  m.feature_shape = split.feature_shape();
  m.feature_dim = shape_size(m.feature_shape);
  Shape out = m.feature_shape;
  out.insert(out.begin(), 1);
  m.class_count = split.head.output_shape(out).back();
  m.head_kind = kind_of(split.head.layers().back()) == LayerKind::kBinaryDense ? HeadKind::kBinary
                                                                              : HeadKind::kFloat;
  m.split_index = split.split_index;
  m.folded_shifts = fold_shifts;
  return b;
}

/// Loads the blob and checks it against the manifest fingerprint.
inline Model<float> load_bundle_extractor(const ExtractorBundle& b) {
  if (sha256_hex(b.blob) != b.manifest.extractor_fingerprint) {
    throw FormatError(FormatErrc::kFingerprintMismatch,
                      "extractor blob does not match manifest fingerprint");
  }
  return load_model(b.blob);
}

/// Writes <prefix>.bnnx and <prefix>.manifest and returns the manifest as
/// written. Nothing is written if either file exists and force is false.
inline HeadManifest write_bundle(ExtractorBundle b, const std::filesystem::path& prefix,
                                 bool force) {
  std::filesystem::path blob_path = prefix;
  blob_path += ".bnnx";
  std::filesystem::path manifest_path = prefix;
  manifest_path += ".manifest";
  if (!force) {
    for (const auto& p : {blob_path, manifest_path})
      if (std::filesystem::exists(p))
        throw IoError(p.string() + " exists (pass --force to overwrite)");
  }
  b.manifest.extractor_blob = blob_path.filename().string();
  write_file(blob_path, b.blob, force);
  write_text_file(manifest_path, b.manifest.to_text(), force);
  return b.manifest;
}

inline ExtractorBundle read_bundle(const std::filesystem::path& manifest_path) {
  const Bytes text = read_file(manifest_path);
  ExtractorBundle b;
  b.manifest = HeadManifest::parse(std::string(text.begin(), text.end()));
  b.blob = read_file(manifest_path.parent_path() / b.manifest.extractor_blob);
  return b;
}

}  // namespace bnn
