#ifndef GESTALT_GESTALTNET_TRAIN_HPP_
#define GESTALT_GESTALTNET_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "gestalt/core/version.hpp"
#include "gestalt/dataio/augment.hpp"
#include "gestalt/dataio/split.hpp"
#include "gestalt/ensemble/aggregate.hpp"
#include "gestalt/gestaltnet/network.hpp"
#include "gestalt/nn/checkpoint.hpp"
#include "gestalt/nn/optim.hpp"
#include "gestalt/preproc/landmarks.hpp"
#include "gestalt/preproc/regions.hpp"

namespace gestalt {

/// Two-phase protocol: identity pretraining (Adam, then a short SGD tail)
/// and syndrome fine-tuning (SGD only, no weight decay anywhere). Epoch
/// counts scale by a desk-scale factor; the full-scale defaults are the
/// published 40+10 and 500.
struct TrainingSchedule {
  int pretrain_adam_epochs = 40;
  double pretrain_adam_lr = 1e-3;
  int pretrain_sgd_epochs = 10;
  double pretrain_sgd_lr = 1e-4;
  double pretrain_sgd_momentum = 0.9;
  int finetune_epochs = 500;
  double finetune_lr = 5e-3;
  double finetune_momentum = 0.9;
  int batch_size = 64;
  double train_fraction = 0.9;
  AugmentationPolicy augment;
  bool augment_enabled = true;
  double head_init_scale = 0.3;

  void validate() const {
    if (pretrain_adam_epochs < 1 || pretrain_sgd_epochs < 1 ||
        finetune_epochs < 1)
      throw DataError("schedule epoch counts must be >= 1");
    if (pretrain_adam_lr <= 0 || pretrain_sgd_lr <= 0 || finetune_lr <= 0)
      throw DataError("schedule learning rates must be > 0");
    if (batch_size < 2) throw DataError("batch size must be >= 2");
  }

  TrainingSchedule scaled(double factor) const {
    if (factor <= 0) throw DataError("scale factor must be > 0");
    TrainingSchedule s = *this;
    auto scale = [factor](int epochs) {
      return std::max(1, static_cast<int>(std::llround(epochs * factor)));
    };
    s.pretrain_adam_epochs = scale(pretrain_adam_epochs);
    s.pretrain_sgd_epochs = scale(pretrain_sgd_epochs);
    s.finetune_epochs = scale(finetune_epochs);
    return s;
  }
};

/// Crops of one region with integer labels; the unit every trainer consumes.
struct CropDataset {
  RegionTag region = RegionTag::full_face;
  int side = 0;
  std::vector<std::string> ids;
  std::vector<RegionCrop> crops;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return crops.size(); }

  void push(std::string id, RegionCrop crop, int label) {
    if (crops.empty()) {
      region = crop.tag;
      side = crop.side;
    }
    if (crop.tag != region)
      throw RegionMismatch("crop " + id + " is " + to_string(crop.tag) +
                           ", dataset is " + to_string(region));
    if (crop.side != side) throw ShapeMismatch("crop side differs");
    if (label < 0 || label >= static_cast<int>(class_names.size()))
      throw InvalidLabel(std::to_string(label));
    ids.push_back(std::move(id));
    crops.push_back(std::move(crop));
    labels.push_back(label);
  }

  CropDataset subset(const std::vector<std::size_t>& indices) const {
    CropDataset out;
    out.region = region;
    out.side = side;
    out.class_names = class_names;
    for (std::size_t i : indices) {
      out.ids.push_back(ids[i]);
      out.crops.push_back(crops[i]);
      out.labels.push_back(labels[i]);
    }
    return out;
  }
};

enum class ModelPhase { pretrained, finetuned };

inline const char* to_string(ModelPhase p) {
  return p == ModelPhase::pretrained ? "pretrained" : "finetuned";
}

/// One region expert plus the preprocessing context needed to reproduce its
/// crops at prediction time.
struct RegionModel {
  RegionTag region = RegionTag::full_face;
  ModelPhase phase = ModelPhase::pretrained;
  Network<float> net;
  std::vector<std::string> labels;  // class names; nonempty once finetuned
  std::optional<LandmarkSet> canonical;
  int align_canvas = 0;

  RegionModel(RegionTag r, Network<float> n)
      : region(r), net(std::move(n)) {}
};

struct EpochMetrics {
  int epoch = 0;
  std::string phase;
  double train_loss = 0.0;
  double train_top1 = 0.0;
  double val_top1 = 0.0;
};

using MetricsLog = std::vector<EpochMetrics>;

/// Line-delimited per-epoch log: epoch, phase, train loss, train/val top-1.
inline void write_metrics_log(const std::string& path, const MetricsLog& log,
                              std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics log: " + path);
  out << "# gestalt metrics v" << kVersion << " seed=" << seed << "\n";
  out << "# epoch\tphase\ttrain_loss\ttrain_top1\tval_top1\n";
  char buf[128];
  for (const auto& m : log) {
    std::snprintf(buf, sizeof(buf), "%d\t%s\t%.6f\t%.6f\t%.6f\n", m.epoch,
                  m.phase.c_str(), m.train_loss, m.train_top1, m.val_top1);
    out << buf;
  }
}

namespace detail {

inline Tensor4<float> crops_to_batch(const CropDataset& data,
                                     const std::vector<std::size_t>& indices) {
  const int side = data.side;
  Tensor4<float> x(static_cast<int>(indices.size()), 1, side, side);
  for (std::size_t k = 0; k < indices.size(); ++k)
    std::copy(data.crops[indices[k]].pixels.begin(),
              data.crops[indices[k]].pixels.end(),
              x.sample(static_cast<int>(k)));
  return x;
}

/// Batch index ranges; a trailing singleton is folded into the previous
/// batch because train-mode batch norm needs at least two samples.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(
    std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t start = 0; start < n; start += batch)
    ranges.emplace_back(start, std::min(n, start + batch));
  if (ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = n;
    ranges.pop_back();
  }
  return ranges;
}

inline double evaluate_top1(Network<float>& net, const CropDataset& data,
                            int batch_size) {
  if (data.size() == 0) return 0.0;
  int correct = 0;
  for (const auto& [lo, hi] : batch_ranges(data.size(), batch_size)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = lo; i < hi; ++i) idx.push_back(i);
    Tensor4<float> x = crops_to_batch(data, idx);
    Tensor4<float> logits = net.forward(x, Mode::infer);
    std::vector<int> labels(data.labels.begin() + lo, data.labels.begin() + hi);
    correct += Network<float>::count_correct(logits, labels);
  }
  return static_cast<double>(correct) / data.size();
}

/// One optimizer phase over the training crops. Augmentation seeds derive
/// from (seed, epoch, dataset index), so results do not depend on worker
/// count or batch assembly order.
inline void run_phase(Network<float>& net, const CropDataset& train,
                      const CropDataset& val, OptimizerState<float>& opt,
                      int epochs, const char* phase_name,
                      const TrainingSchedule& sched, std::uint64_t seed,
                      int& epoch_counter, MetricsLog* log) {
  auto params = net.parameters();
  std::vector<Tensor4<float>*> param_ptrs;
  for (auto& p : params) param_ptrs.push_back(p.tensor);
  auto grads = net.zero_gradients();
  std::vector<const Tensor4<float>*> grad_ptrs;
  for (auto& g : grads) grad_ptrs.push_back(&g);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int e = 0; e < epochs; ++e) {
    const std::uint64_t epoch_seed =
        derive_seed(seed, {0xe90c, static_cast<std::uint64_t>(epoch_counter)});
    Rng shuffle_rng(derive_seed(epoch_seed, {1}));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    int correct_sum = 0;
    for (const auto& [lo, hi] : batch_ranges(order.size(), sched.batch_size)) {
      const std::size_t bs = hi - lo;
      Tensor4<float> x(static_cast<int>(bs), 1, train.side, train.side);
      std::vector<int> labels(bs);
      parallel_for(static_cast<std::int64_t>(bs), [&](std::int64_t k) {
        const std::size_t di = order[lo + k];
        labels[k] = train.labels[di];
        if (sched.augment_enabled) {
          AugmentationPolicy policy = sched.augment;
          policy.seed = derive_seed(epoch_seed, {2, di});
          const RegionCrop aug = augment(train.crops[di], policy);
          std::copy(aug.pixels.begin(), aug.pixels.end(),
                    x.sample(static_cast<int>(k)));
        } else {
          std::copy(train.crops[di].pixels.begin(),
                    train.crops[di].pixels.end(),
                    x.sample(static_cast<int>(k)));
        }
      });
      int correct = 0;
      const float loss = net.loss_and_gradients(
          x, labels, derive_seed(epoch_seed, {3, lo}), &grads, &correct);
      optimizer_step(opt, param_ptrs, grad_ptrs);
      loss_sum += static_cast<double>(loss) * bs;
      correct_sum += correct;
    }

    if (log) {
      EpochMetrics m;
      m.epoch = epoch_counter;
      m.phase = phase_name;
      m.train_loss = loss_sum / train.size();
      m.train_top1 = static_cast<double>(correct_sum) / train.size();
      m.val_top1 = evaluate_top1(net, val, sched.batch_size);
      log->push_back(m);
    }
    ++epoch_counter;
  }
}

}  // namespace detail

/// Identity pretraining of one region expert: 90/10 split, Adam phase then
/// SGD tail, per-epoch metrics. Deterministic given the seed.
inline RegionModel pretrain_region(const CropDataset& data,
                                   const ArchitectureDescriptor& arch_base,
                                   const TrainingSchedule& schedule,
                                   std::uint64_t seed,
                                   MetricsLog* log = nullptr) {
  schedule.validate();
  if (data.class_names.size() < 2)
    throw InsufficientClasses("pretraining needs >= 2 identity classes, got " +
                              std::to_string(data.class_names.size()));
  ArchitectureDescriptor arch = arch_base;
  arch.head_width = static_cast<int>(data.class_names.size());
  arch.input_side = data.side;
  Network<float> net(arch);
  net.init_params(derive_seed(seed, {0x111}));

  const IndexSplit split = stratified_split_indices(
      data.labels, schedule.train_fraction, derive_seed(seed, {0x5b}));
  const CropDataset train = data.subset(split.train);
  const CropDataset val = data.subset(split.val);

  RegionModel model(data.region, std::move(net));
  OptimizerState<float> adam = OptimizerState<float>::adam(
      static_cast<float>(schedule.pretrain_adam_lr));
  int epoch = 0;
  detail::run_phase(model.net, train, val, adam, schedule.pretrain_adam_epochs,
                    "pretrain-adam", schedule, seed, epoch, log);
  OptimizerState<float> sgd = OptimizerState<float>::sgd(
      static_cast<float>(schedule.pretrain_sgd_lr),
      static_cast<float>(schedule.pretrain_sgd_momentum));
  detail::run_phase(model.net, train, val, sgd, schedule.pretrain_sgd_epochs,
                    "pretrain-sgd", schedule, derive_seed(seed, {0x222}), epoch,
                    log);
  model.phase = ModelPhase::pretrained;
  return model;
}

/// Transfer step: every layer except the head starts from the pretrained
/// base; the head is re-initialized (scaled Xavier, default 0.3) and sized
/// to the syndrome class count; SGD, no weight decay.
inline RegionModel finetune_region(const RegionModel& base,
                                   const CropDataset& data,
                                   const TrainingSchedule& schedule,
                                   std::uint64_t seed,
                                   MetricsLog* log = nullptr) {
  schedule.validate();
  if (base.phase != ModelPhase::pretrained)
    throw PhaseError("finetune expects a pretrained base, got " +
                     std::string(to_string(base.phase)));
  if (data.class_names.size() < 2)
    throw InsufficientClasses("finetuning needs >= 2 classes, got " +
                              std::to_string(data.class_names.size()));
  if (data.region != base.region)
    throw RegionMismatch("dataset region " +
                         std::string(to_string(data.region)) + " vs model " +
                         to_string(base.region));
  if (data.side != base.net.arch().input_side)
    throw ShapeMismatch("crop side " + std::to_string(data.side) +
                        " vs model input " +
                        std::to_string(base.net.arch().input_side));

  RegionModel model = base;
  model.net.replace_head(static_cast<int>(data.class_names.size()),
                         schedule.head_init_scale,
                         derive_seed(seed, {0x4ead}));
  model.labels = data.class_names;

  const IndexSplit split = stratified_split_indices(
      data.labels, schedule.train_fraction, derive_seed(seed, {0x5b}));
  const CropDataset train = data.subset(split.train);
  const CropDataset val = data.subset(split.val);

  OptimizerState<float> sgd = OptimizerState<float>::sgd(
      static_cast<float>(schedule.finetune_lr),
      static_cast<float>(schedule.finetune_momentum));
  int epoch = 0;
  detail::run_phase(model.net, train, val, sgd, schedule.finetune_epochs,
                    "finetune", schedule, seed, epoch, log);
  model.phase = ModelPhase::finetuned;
  return model;
}

namespace detail {

inline GestaltScores scores_from_logits(const float* row, std::int64_t n,
                                        const std::vector<std::string>& labels) {
  Tensor4<double> logits(1, static_cast<int>(n), 1, 1);
  for (std::int64_t j = 0; j < n; ++j) logits.v[j] = row[j];
  Tensor4<double> probs = softmax(logits);  // double path: 1e-9 row-sum check
  GestaltScores scores;
  scores.labels = labels;
  scores.scores.assign(probs.v.begin(), probs.v.end());
  scores.validate();
  return scores;
}

}  // namespace detail

/// Softmax scores of one crop under a fine-tuned expert, inference mode
/// (running BN statistics, dropout off); deterministic and independent of
/// batching.
inline GestaltScores predict_region(RegionModel& model, const RegionCrop& crop) {
  if (model.phase != ModelPhase::finetuned)
    throw PhaseError("predict requires a finetuned model");
  if (crop.tag != model.region)
    throw RegionMismatch("crop " + std::string(to_string(crop.tag)) +
                         " vs model " + to_string(model.region));
  Tensor4<float> x(1, 1, crop.side, crop.side);
  std::copy(crop.pixels.begin(), crop.pixels.end(), x.data());
  Tensor4<float> logits = model.net.forward(x, Mode::infer);
  return detail::scores_from_logits(logits.data(), logits.features(),
                                    model.labels);
}

/// Batched variant; bit-identical to predict_region per element.
inline std::vector<GestaltScores> predict_region_batch(
    RegionModel& model, const std::vector<RegionCrop>& crops,
    int batch_size = 32) {
  if (model.phase != ModelPhase::finetuned)
    throw PhaseError("predict requires a finetuned model");
  std::vector<GestaltScores> out;
  out.reserve(crops.size());
  for (std::size_t lo = 0; lo < crops.size();
       lo += static_cast<std::size_t>(batch_size)) {
    const std::size_t hi =
        std::min(crops.size(), lo + static_cast<std::size_t>(batch_size));
    const int side = model.net.arch().input_side;
    Tensor4<float> x(static_cast<int>(hi - lo), 1, side, side);
    for (std::size_t i = lo; i < hi; ++i) {
      if (crops[i].tag != model.region)
        throw RegionMismatch("crop " + std::string(to_string(crops[i].tag)) +
                             " vs model " + to_string(model.region));
      if (crops[i].side != side) throw ShapeMismatch("crop side");
      std::copy(crops[i].pixels.begin(), crops[i].pixels.end(),
                x.sample(static_cast<int>(i - lo)));
    }
    Tensor4<float> logits = model.net.forward(x, Mode::infer);
    for (int k = 0; k < logits.n; ++k)
      out.push_back(detail::scores_from_logits(
          logits.sample(k), logits.features(), model.labels));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Region-model checkpoints.

inline void save_region_model(const std::string& path, RegionModel& model,
                              std::uint64_t seed,
                              const OptimizerState<float>* opt = nullptr) {
  Checkpoint ckpt;
  ckpt.set_meta("format", "gestalt-region-model");
  ckpt.set_meta("version", kVersion);
  ckpt.set_meta("region", to_string(model.region));
  ckpt.set_meta("phase", to_string(model.phase));
  ckpt.set_meta("arch", model.net.arch().serialize());
  ckpt.set_meta("seed", std::to_string(seed));
  std::string labels;
  for (std::size_t i = 0; i < model.labels.size(); ++i)
    labels += (i ? "," : "") + model.labels[i];
  ckpt.set_meta("labels", labels);
  if (model.canonical) {
    std::ostringstream canon;
    LandmarkRecord rec{"-", *model.canonical};
    write_landmark_record(canon, rec);
    ckpt.set_meta("canonical", canon.str());
    ckpt.set_meta("canvas", std::to_string(model.align_canvas));
  }
  for (const auto& ref : model.net.state_tensors())
    ckpt.tensors.emplace_back(ref.name, *ref.tensor);
  if (opt) {
    ckpt.has_optimizer = true;
    ckpt.opt_kind = opt->kind;
    ckpt.opt_lr = opt->lr;
    ckpt.opt_beta1 = opt->beta1;
    ckpt.opt_beta2 = opt->beta2;
    ckpt.opt_eps = opt->eps;
    ckpt.opt_momentum = opt->momentum;
    ckpt.opt_timestep = opt->timestep;
    ckpt.opt_m = opt->m;
    ckpt.opt_v = opt->v;
  }
  ckpt.save(path);
}

inline RegionModel load_region_model(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  if (ckpt.get_meta("format") != "gestalt-region-model")
    throw ParseError(path + ": not a region model checkpoint");
  const ArchitectureDescriptor arch =
      ArchitectureDescriptor::parse(ckpt.get_meta("arch"));
  Network<float> net(arch);
  RegionModel model(region_from_string(ckpt.get_meta("region")),
                    std::move(net));
  model.phase = ckpt.get_meta("phase") == std::string("finetuned")
                    ? ModelPhase::finetuned
                    : ModelPhase::pretrained;
  const std::string labels = ckpt.get_meta("labels");
  std::istringstream ss(labels);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) model.labels.push_back(item);
  if (ckpt.has_meta("canonical")) {
    std::istringstream canon(ckpt.get_meta("canonical"));
    model.canonical = read_landmark_record(canon, path).landmarks;
    model.align_canvas = std::stoi(ckpt.get_meta("canvas"));
  }
  for (auto& ref : model.net.state_tensors()) {
    const Tensor4<float>& stored = ckpt.tensor(ref.name);
    if (!stored.same_shape(*ref.tensor))
      throw ShapeMismatch(path + ": tensor " + ref.name + " " +
                          stored.shape_str() + " vs " +
                          ref.tensor->shape_str());
    *ref.tensor = stored;
  }
  return model;
}

}  // namespace gestalt

#endif  // GESTALT_GESTALTNET_TRAIN_HPP_
