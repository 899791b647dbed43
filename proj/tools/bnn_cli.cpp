// bnn: pretraining, head fine-tuning, evaluation, feature caching, extractor
// export and model inspection from the command line.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bnn/bnn.hpp"

namespace fs = std::filesystem;
using namespace bnn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

class UsageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Shared options.

struct DataArgs {
  std::string images, labels;
  std::string list;  // text file of "path label" lines pointing at PGM/PPM files
};

struct PreArgs {
  std::size_t resize = 0;  // 0: no preprocessing
  std::size_t crop = 0;
  bool shortest = false;
};

struct TrainArgs {
  std::size_t epochs = 10;
  std::size_t batch = 32;
  std::uint64_t seed = 42;
  std::string optimizer = "adam";
  double lr = -1;
  bool no_clip = false;
};

void add_data(CLI::App* cmd, DataArgs& d, const std::string& prefix, bool required) {
  auto* img = cmd->add_option("--" + prefix + "images", d.images, "IDX image file");
  auto* lab = cmd->add_option("--" + prefix + "labels", d.labels, "IDX label file");
  auto* lst = cmd->add_option("--" + prefix + "list", d.list,
                              "text file with one 'image.pgm label' pair per line");
  img->needs(lab);
  lab->needs(img);
  lst->excludes(img);
  if (required) {
    cmd->callback([img, lst] {
      if (img->count() == 0 && lst->count() == 0)
        throw CLI::ValidationError("dataset", "give --images/--labels or --list");
    });
  }
}

void add_pre(CLI::App* cmd, PreArgs& p) {
  cmd->add_option("--resize", p.resize, "resize the longest side to this length before cropping");
  cmd->add_option("--crop", p.crop, "square crop size (IDX training data: random crops; otherwise center crops)");
  cmd->add_flag("--resize-shortest", p.shortest, "apply --resize to the shortest side instead");
}

void add_train(CLI::App* cmd, TrainArgs& t) {
  cmd->add_option("--epochs", t.epochs, "training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", t.batch, "mini-batch size")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--seed", t.seed, "RNG seed for initialization and shuffling");
  cmd->add_option("--optimizer", t.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--lr", t.lr, "learning rate (default: adam 1e-3, sgd 1e-2)");
  cmd->add_flag("--no-clip", t.no_clip, "do not clip binary latent weights");
}

TrainConfig to_config(const TrainArgs& t) {
  TrainConfig cfg;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch;
  cfg.seed = t.seed;
  cfg.optimizer = t.optimizer == "sgd" ? OptimizerKind::kSgdMomentum : OptimizerKind::kAdam;
  if (t.lr >= 0) cfg.lr = t.lr;
  cfg.clip_binary_weights = !t.no_clip;
  return cfg;
}

std::optional<PreprocessConfig> to_pre(const PreArgs& p) {
  if (p.resize == 0 && p.crop == 0) return std::nullopt;
  if (p.resize == 0 || p.crop == 0) throw UsageError("--resize and --crop go together");
  PreprocessConfig cfg;
  cfg.resize_long = p.resize;
  cfg.crop = p.crop;
  cfg.rule = p.shortest ? ResizeRule::kShortest : ResizeRule::kLongest;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Loading.

template <typename F>
auto with_context(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FormatError& e) {
    throw FormatError(e.code(), what + ": " + e.what());
  }
}

Dataset<float> load_idx_pair(const std::string& images, const std::string& labels) {
  const IdxDataset img = with_context(images, [&] { return parse_idx(read_file(images)); });
  const IdxDataset lab = with_context(labels, [&] { return parse_idx(read_file(labels)); });
  Dataset<float> d;
  d.samples = img.to_tensor();
  if (d.samples.shape().size() == 3) {
    d.samples = d.samples.reshaped({d.samples.dim(0), 1, d.samples.dim(1), d.samples.dim(2)});
  }
  d.labels = with_context(labels, [&] { return lab.to_labels(); });
  if (d.labels.size() != d.samples.dim(0)) {
    throw FormatError(FormatErrc::kMalformed, images + " has " + std::to_string(d.samples.dim(0)) +
                                                  " samples but " + labels + " has " +
                                                  std::to_string(d.labels.size()) + " labels");
  }
  return d;
}

/// PGM/PPM files of any size, each resized and center-cropped to a common
/// square so they stack into one batch.
Dataset<float> load_list(const std::string& list, const std::optional<PreprocessConfig>& pre) {
  if (!pre) throw UsageError("--list needs --resize and --crop to bring images to one size");
  std::ifstream in(list);
  if (!in) throw IoError("cannot open " + list);
  const fs::path base = fs::path(list).parent_path();
  PreprocessConfig center = *pre;
  center.train_mode = false;
  std::vector<float> all;
  Dataset<float> d;
  std::size_t channels = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string path;
    long label = -1;
    if (!(ls >> path >> label) || label < 0) {
      throw FormatError(FormatErrc::kMalformed, list + ":" + std::to_string(lineno) + ": expected 'path label'");
    }
    const fs::path p = fs::path(path).is_absolute() ? fs::path(path) : base / path;
    const PnmImage img = with_context(p.string(), [&] { return parse_pnm(read_file(p)); });
    if (channels && img.channels != channels) {
      throw FormatError(FormatErrc::kMalformed, p.string() + ": mixed gray and color images");
    }
    channels = img.channels;
    std::vector<std::string> warnings;
    Rng* none = nullptr;
    const FloatTensor t = preprocess(img.to_tensor(), center, none, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << p.string() << ": " << w << '\n';
    all.insert(all.end(), t.data().begin(), t.data().end());
    d.labels.push_back(std::uint32_t(label));
  }
  if (d.labels.empty()) throw FormatError(FormatErrc::kMalformed, list + " lists no images");
  d.samples = FloatTensor({d.labels.size(), channels, pre->crop, pre->crop}, std::move(all));
  return d;
}

std::optional<Dataset<float>> load_data(const DataArgs& a, const std::optional<PreprocessConfig>& pre) {
  if (!a.list.empty()) return load_list(a.list, pre);
  if (!a.images.empty()) return load_idx_pair(a.images, a.labels);
  return std::nullopt;
}

Model<float> load_model_file(const std::string& path) {
  return with_context(path, [&] { return load_model(read_file(path)); });
}

Shape sample_shape_after(const Dataset<float>& d, const std::optional<PreprocessConfig>& pre,
                         bool from_list) {
  Shape s = d.sample_shape();
  if (pre && !from_list && s.size() == 3) {
    s[1] = s[2] = pre->crop;
  }
  return s;
}

std::size_t resolve_split(const Model<float>& m, long split) {
  if (split < 0) return last_layer_split(m);
  return std::size_t(split);
}

// ---------------------------------------------------------------------------
// Reporting.

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

class CsvLog {
 public:
  CsvLog(const std::string& path, bool force) : path_(path), force_(force) {
    text_ = "epoch,train_loss,train_top1,val_top1,val_top5\n";
  }
  void add(const EpochRecord& r) {
    text_ += std::to_string(r.epoch) + "," + fmt(r.train.loss) + "," + fmt(r.train.top1) + "," +
             (r.val ? fmt(r.val->top1) : "") + "," + (r.val ? fmt(r.val->top5) : "") + "\n";
  }
  void write() const {
    if (!path_.empty()) write_text_file(path_, text_, force_);
  }

 private:
  std::string path_;
  bool force_;
  std::string text_;
};

void print_epoch(const EpochRecord& r) {
  std::cout << "epoch " << r.epoch << "  loss " << fmt(r.train.loss) << "  train_top1 "
            << fmt(r.train.top1);
  if (r.val) std::cout << "  val_top1 " << fmt(r.val->top1) << "  val_top5 " << fmt(r.val->top5);
  std::cout << std::endl;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::cout << label << "  loss " << fmt(m.loss) << "  top1 " << fmt(m.top1) << "  top5 "
            << fmt(m.top5) << '\n';
}

void check_output(const std::string& path, bool force) {
  if (!path.empty() && !force && fs::exists(path)) {
    throw IoError(path + " exists; pass --force to overwrite");
  }
}

// ---------------------------------------------------------------------------
// Commands.

struct PretrainArgs {
  std::string arch, out, log;
  DataArgs train, val;
  PreArgs pre;
  TrainArgs t;
  bool force = false;
};

int cmd_pretrain(const PretrainArgs& a) {
  check_output(a.out, a.force);
  check_output(a.log, a.force);
  std::vector<LayerSpec> specs;
  try {
    specs = parse_arch(a.arch);
  } catch (const ShapeError& e) {
    throw UsageError(std::string("--arch: ") + e.what());
  }
  const auto pre = to_pre(a.pre);
  const Dataset<float> train = *load_data(a.train, pre);
  const auto val = load_data(a.val, pre);
  const TrainConfig cfg = to_config(a.t);
  Rng rng(cfg.seed);
  Model<float> model;
  try {
    model = build_model<float>(specs, sample_shape_after(train, pre, !a.train.list.empty()), rng);
  } catch (const ShapeError& e) {
    throw UsageError(std::string("--arch does not fit the data: ") + e.what());
  }
  TrainHooks<float> hooks;
  std::function<Tensor<float>(Tensor<float>)> eval;
  if (pre && a.train.list.empty()) {
    hooks.transform = train_transform(PreprocessConfig{pre->resize_long, pre->crop, true, pre->rule});
    eval = eval_transform(pre);
  }
  CsvLog log(a.log, a.force);
  const auto t0 = std::chrono::steady_clock::now();
  const auto history = fit(model, train, val ? &*val : nullptr, cfg, hooks, eval, [&](const EpochRecord& r) {
    print_epoch(r);
    log.add(r);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(a.out, save_model(model), a.force);
  log.write();
  if (history.back().val) print_metrics("final val", *history.back().val);
  std::cout << "wrote " << a.out << " (" << model.size() << " layers, " << fmt(secs) << " s)\n";
  return kOk;
}

struct FinetuneArgs {
  std::string model, features, val_features, out, log, head = "float";
  long split = -1;
  std::size_t classes = 0;
  DataArgs train, val;
  PreArgs pre;
  TrainArgs t;
  bool force = false;
};

int cmd_finetune(const FinetuneArgs& a) {
  check_output(a.out, a.force);
  check_output(a.log, a.force);
  const Model<float> model = load_model_file(a.model);
  const auto pre = to_pre(a.pre);
  SplitModel split;
  FeatureCache train_cache;
  std::optional<FeatureCache> val_cache;
  const std::size_t k = resolve_split(model, a.split);
  if (!a.features.empty()) {
    train_cache = with_context(a.features, [&] { return load_feature_cache(read_file(a.features)); });
    split = split_model(model, k, {});
    if (!a.val_features.empty())
      val_cache = with_context(a.val_features, [&] { return load_feature_cache(read_file(a.val_features)); });
  } else {
    const auto data = load_data(a.train, pre);
    if (!data) throw UsageError("finetune needs --features or a training dataset");
    split = split_model(model, k, sample_shape_after(*data, pre, !a.train.list.empty()));
    const auto pre_eval = a.train.list.empty() ? pre : std::nullopt;
    train_cache = extract_features(split.extractor, *data, pre_eval);
    if (const auto val = load_data(a.val, pre)) val_cache = extract_features(split.extractor, *val, pre_eval);
  }
  std::size_t classes = a.classes;
  if (classes == 0)
    for (auto l : train_cache.labels) classes = std::max<std::size_t>(classes, l + 1);
  const HeadKind kind = a.head == "binary" ? HeadKind::kBinary : HeadKind::kFloat;
  const TrainConfig cfg = to_config(a.t);
  CsvLog log(a.log, a.force);
  const HeadResult res = retrain_head(split, train_cache, kind, classes, cfg,
                                      val_cache ? &*val_cache : nullptr, [&](const EpochRecord& r) {
                                        print_epoch(r);
                                        log.add(r);
                                      });
  write_file(a.out, save_model(split.head), a.force);
  log.write();
  print_metrics("final train", res.train);
  if (res.val) print_metrics("final val", *res.val);
  std::cout << "extractor " << fingerprint(split.extractor) << " (split " << k << ", "
            << head_kind_name(kind) << " head)\nwrote " << a.out << '\n';
  return kOk;
}

struct EvaluateArgs {
  std::string model, head, bundle;
  long split = -1;
  DataArgs data;
  PreArgs pre;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.model.empty() == a.bundle.empty()) throw UsageError("give exactly one of --model or --bundle");
  const auto pre = to_pre(a.pre);
  const Dataset<float> data = *load_data(a.data, pre);
  Model<float> full;
  if (!a.bundle.empty()) {
    if (a.head.empty()) throw UsageError("--bundle needs --head");
    const ExtractorBundle b = with_context(a.bundle, [&] { return read_bundle(a.bundle); });
    full = with_context(a.bundle, [&] { return load_bundle_extractor(b); });
    Model<float> head = load_model_file(a.head);
    for (auto& l : head.layers()) full.add(std::move(l));
  } else {
    full = load_model_file(a.model);
    if (!a.head.empty()) {
      SplitModel s = split_model(full, resolve_split(full, a.split), {});
      s.head = load_model_file(a.head);
      full = s.combined();
    }
  }
  const auto eval = a.data.list.empty() ? eval_transform(pre) : nullptr;
  const Metrics m = evaluate(full, data, eval);
  print_metrics("evaluate (" + std::to_string(data.size()) + " samples)", m);
  return kOk;
}

struct FeaturesArgs {
  std::string model, out;
  long split = -1;
  DataArgs data;
  PreArgs pre;
  bool force = false;
};

int cmd_features(const FeaturesArgs& a) {
  check_output(a.out, a.force);
  const Model<float> model = load_model_file(a.model);
  const auto pre = to_pre(a.pre);
  const Dataset<float> data = *load_data(a.data, pre);
  const SplitModel s = split_model(model, resolve_split(model, a.split), data.sample_shape());
  const FeatureCache c = extract_features(s.extractor, data, a.data.list.empty() ? pre : std::nullopt);
  write_file(a.out, save_feature_cache(c), a.force);
  const Shape per(c.features.shape().begin() + 1, c.features.shape().end());
  std::cout << "wrote " << a.out << ": " << c.size() << " x " << shape_string(per)
            << " features, extractor " << c.fingerprint << '\n';
  return kOk;
}

struct ExportArgs {
  std::string model, out, input_shape;
  long split = -1;
  bool fold = false, force = false;
};

Shape parse_shape(const std::string& s) {
  Shape out;
  for (auto part : detail::split(s, 'x')) out.push_back(detail::parse_count(part, s));
  return out;
}

/// Per-sample input shape implied by the first layer, or `given` when set.
Shape infer_input_shape(const Model<float>& m, const std::string& given) {
  if (!given.empty()) {
    try {
      return parse_shape(given);
    } catch (const ShapeError& e) {
      throw UsageError(std::string("--input-shape: ") + e.what());
    }
  }
  for (const auto& l : m.layers()) {
    if (const auto* d = std::get_if<BinaryDenseLayer<float>>(&l)) return {d->in_features};
    if (const auto* d = std::get_if<DenseLayer<float>>(&l)) return {d->in_features};
    if (std::holds_alternative<BinaryConv2dLayer<float>>(l)) break;
    if (std::holds_alternative<BatchNormLayer<float>>(l)) break;
  }
  throw UsageError("cannot infer the input shape of this model; pass --input-shape CxHxW");
}

int cmd_export(const ExportArgs& a) {
  const Model<float> model = load_model_file(a.model);
  const Shape sample = infer_input_shape(model, a.input_shape);
  Shape probe = sample;
  probe.insert(probe.begin(), 1);
  model.output_shape(probe);
  const SplitModel s = split_model(model, resolve_split(model, a.split), sample);
  const ExtractorBundle b = export_extractor(s, a.fold);
  const HeadManifest written = write_bundle(b, a.out, a.force);
  std::cout << "wrote " << a.out << ".bnnx (" << b.blob.size() << " bytes) and " << a.out
            << ".manifest\n"
            << written.to_text();
  return kOk;
}

struct InspectArgs {
  std::string model, input_shape;
};

int cmd_inspect(const InspectArgs& a) {
  const Bytes bytes = read_file(a.model);
  const Model<float> m = with_context(a.model, [&] { return load_model(bytes); });
  std::optional<Shape> shape;
  try {
    Shape s = infer_input_shape(m, a.input_shape);
    s.insert(s.begin(), 1);
    shape = s;
  } catch (const UsageError&) {
  }
  std::cout << a.model << ": " << m.size() << " layers, " << bytes.size() << " bytes, fingerprint "
            << fingerprint(m) << '\n';
  std::printf("%3s  %-13s %-14s %10s %12s %12s\n", "#", "kind", "output", "params", "binary_bits",
              "packed_bytes");
  std::size_t total_params = 0, total_bits = 0, total_bytes = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& layer = m.layers()[i];
    std::size_t params = 0, bits = 0;
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, BinaryDenseLayer<float>> ||
                        std::is_same_v<L, BinaryConv2dLayer<float>>) {
            bits = l.latent.size();
            params = bits;
          } else if constexpr (std::is_same_v<L, DenseLayer<float>>) {
            params = l.weight.size() + l.bias.size();
          } else if constexpr (std::is_same_v<L, BatchNormLayer<float>>) {
            params = 2 * l.channels;
          }
        },
        layer);
    std::string out = "?";
    if (shape) {
      shape = std::visit([&](const auto& l) { return l.output_shape(*shape); }, layer);
      Shape per(shape->begin() + 1, shape->end());
      out = shape_string(per);
    }
    const std::size_t packed = (bits + 7) / 8;
    std::printf("%3zu  %-13s %-14s %10zu %12zu %12zu\n", i, kind_name(kind_of(layer)), out.c_str(),
                params, bits, packed);
    total_params += params;
    total_bits += bits;
    total_bytes += packed;
  }
  std::printf("     %-13s %-14s %10zu %12zu %12zu\n", "total", "", total_params, total_bits, total_bytes);
  return kOk;
}

struct SynthArgs {
  std::string prefix, classes;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  bool force = false;
};

int cmd_synth(const SynthArgs& a) {
  std::vector<std::size_t> classes;
  if (!a.classes.empty()) {
    for (auto part : detail::split(a.classes, ',')) {
      std::size_t c = 0;
      const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), c);
      if (ec != std::errc() || p != part.data() + part.size() || c >= synth::kClasses)
        throw UsageError("--classes: expected digits 0-9, got '" + std::string(part) + "'");
      classes.push_back(c);
    }
  }
  const auto set = synth::make_glyphs(a.count, a.seed, classes);
  write_file(a.prefix + "-images.idx", set.images_idx(), a.force);
  write_file(a.prefix + "-labels.idx", set.labels_idx(), a.force);
  std::cout << "wrote " << a.prefix << "-images.idx and " << a.prefix << "-labels.idx (" << a.count
            << " samples)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary neural network training, transfer and export"};
  app.require_subcommand(1);

  PretrainArgs pa;
  auto* pretrain = app.add_subcommand("pretrain", "train a model from an architecture string");
  pretrain->add_option("--arch", pa.arch, "comma-separated layer list, e.g. bdense:256,bn,sign,dense:10")
      ->required();
  add_data(pretrain, pa.train, "", true);
  add_data(pretrain, pa.val, "val-", false);
  add_pre(pretrain, pa.pre);
  add_train(pretrain, pa.t);
  pretrain->add_option("--out", pa.out, "output .bnnx model")->required();
  pretrain->add_option("--log", pa.log, "CSV log of per-epoch metrics");
  pretrain->add_flag("--force", pa.force, "overwrite existing outputs");

  FinetuneArgs fa;
  auto* finetune = app.add_subcommand("finetune", "retrain the head of a model on frozen features");
  finetune->add_option("--model", fa.model, "pretrained .bnnx model")->required();
  finetune->add_option("--split", fa.split, "layers kept frozen (default: all but the last)");
  finetune->add_option("--head", fa.head, "classifier kind")->check(CLI::IsMember({"float", "binary"}));
  finetune->add_option("--classes", fa.classes, "class count (default: largest label + 1)");
  finetune->add_option("--features", fa.features, "training feature cache from 'bnn features'");
  finetune->add_option("--val-features", fa.val_features, "validation feature cache");
  add_data(finetune, fa.train, "", false);
  add_data(finetune, fa.val, "val-", false);
  add_pre(finetune, fa.pre);
  add_train(finetune, fa.t);
  finetune->add_option("--out", fa.out, "output .bnnx holding only the head")->required();
  finetune->add_option("--log", fa.log, "CSV log of per-epoch metrics");
  finetune->add_flag("--force", fa.force, "overwrite existing outputs");

  EvaluateArgs ea;
  auto* eval = app.add_subcommand("evaluate", "top-1/top-5 accuracy of a model on a dataset");
  eval->add_option("--model", ea.model, ".bnnx model");
  eval->add_option("--bundle", ea.bundle, "extractor bundle manifest (use with --head)");
  eval->add_option("--head", ea.head, "head .bnnx from 'bnn finetune'");
  eval->add_option("--split", ea.split, "split used when combining --model with --head");
  add_data(eval, ea.data, "", true);
  add_pre(eval, ea.pre);

  FeaturesArgs xa;
  auto* feats = app.add_subcommand("features", "cache frozen-extractor features for a dataset");
  feats->add_option("--model", xa.model, ".bnnx model")->required();
  feats->add_option("--split", xa.split, "layers in the extractor (default: all but the last)");
  add_data(feats, xa.data, "", true);
  add_pre(feats, xa.pre);
  feats->add_option("--out", xa.out, "output feature cache (.bnnf)")->required();
  feats->add_flag("--force", xa.force, "overwrite existing outputs");

  ExportArgs pxa;
  auto* exp = app.add_subcommand("export", "write the frozen extractor as a bundle");
  exp->add_option("--model", pxa.model, ".bnnx model")->required();
  exp->add_option("--split", pxa.split, "layers in the extractor (default: all but the last)");
  exp->add_option("--input-shape", pxa.input_shape, "per-sample input shape, e.g. 1x28x28");
  exp->add_flag("--fold-shifts", pxa.fold, "replace batch norm by power-of-two shifts");
  exp->add_option("--out", pxa.out, "output prefix; writes PREFIX.bnnx and PREFIX.manifest")->required();
  exp->add_flag("--force", pxa.force, "overwrite existing outputs");

  InspectArgs ia;
  auto* insp = app.add_subcommand("inspect", "print a layer-by-layer model summary");
  insp->add_option("model", ia.model, ".bnnx model")->required();
  insp->add_option("--input-shape", ia.input_shape, "per-sample input shape, e.g. 1x28x28");

  SynthArgs sa;
  auto* syn = app.add_subcommand("synth", "generate a synthetic 28x28 glyph dataset as IDX files");
  syn->add_option("--out-prefix", sa.prefix, "writes PREFIX-images.idx and PREFIX-labels.idx")->required();
  syn->add_option("--count", sa.count, "number of samples")->check(CLI::PositiveNumber);
  syn->add_option("--seed", sa.seed, "generator seed");
  syn->add_option("--classes", sa.classes, "comma-separated subset of 0-9 (default: all)");
  syn->add_flag("--force", sa.force, "overwrite existing outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*pretrain) return cmd_pretrain(pa);
    if (*finetune) return cmd_finetune(fa);
    if (*eval) return cmd_evaluate(ea);
    if (*feats) return cmd_features(xa);
    if (*exp) return cmd_export(pxa);
    if (*insp) return cmd_inspect(ia);
    if (*syn) return cmd_synth(sa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
