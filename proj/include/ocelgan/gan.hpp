// Copyright 2026 The ocelgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Sequence-to-sequence GAN for suffix prediction.
//
// Generator: an encoder LSTM reads the prefix; its final per-layer (h, c)
// seeds a decoder LSTM whose first input is the last prefix vector. Each
// decoder step emits one event vector from three heads on the top hidden
// state:
//   - activity head, |A| + 1 classes where the last class is EOS,
//   - categorical head, one block per categorical attribute,
//   - numeric head (numeric attributes then elapsed), squashed by a sigmoid.
// Training emissions are Gumbel-Softmax relaxations; inference emissions
// are hard one-hots and decoding stops at EOS.
//
// Discriminator: an LSTM over prefix || suffix and a linear scorer on the
// final top hidden state, squashed to a probability.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocelgan/autodiff.hpp"
#include "ocelgan/encoding.hpp"
#include "ocelgan/lstm.hpp"
#include "ocelgan/metrics.hpp"
#include "ocelgan/optim.hpp"
#include "ocelgan/random.hpp"

namespace ocelgan::gan {

using ad::Matrix;
using ad::Parameter;
using ad::ParamRefs;
using ad::Tape;
using ad::Var;

struct TrainConfig {
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  double learning_rate = 5.5e-5;
  double rms_decay = 0.99;
  double rms_epsilon = 1e-8;
  std::size_t num_layers = 5;
  std::size_t hidden_size = 64;
  double clip_norm = 1.0;
  double teacher_forcing_prob = 0.5;
  double gumbel_tau = 0.75;
  std::size_t validation_every = 5;
  double init_scale = 0.5;
  /// Pairs per mini-batch; batches never mix partitions. 0 = whole partition.
  std::size_t batch_size = 8;
  /// Inference decoding bound; 0 = twice the longest training suffix.
  std::size_t max_len = 0;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(errc::kInvalidConfig, what); };
    if (!(learning_rate > 0)) bad("learning_rate must be positive");
    if (!(rms_decay > 0 && rms_decay < 1)) bad("rms_decay must lie in (0, 1)");
    if (!(rms_epsilon > 0)) bad("rms_epsilon must be positive");
    if (num_layers == 0) bad("num_layers must be positive");
    if (hidden_size == 0) bad("hidden_size must be positive");
    if (!(clip_norm > 0)) bad("clip_norm must be positive");
    if (!(teacher_forcing_prob >= 0 && teacher_forcing_prob <= 1)) {
      bad("teacher_forcing_prob must lie in [0, 1]");
    }
    if (!(gumbel_tau > 0)) bad("gumbel_tau must be positive");
    if (validation_every == 0) bad("validation_every must be positive");
    if (!(init_scale > 0)) bad("init_scale must be positive");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"seed", c.seed},
                     {"learning_rate", c.learning_rate},
                     {"rms_decay", c.rms_decay},
                     {"rms_epsilon", c.rms_epsilon},
                     {"num_layers", c.num_layers},
                     {"hidden_size", c.hidden_size},
                     {"clip_norm", c.clip_norm},
                     {"teacher_forcing_prob", c.teacher_forcing_prob},
                     {"gumbel_tau", c.gumbel_tau},
                     {"validation_every", c.validation_every},
                     {"init_scale", c.init_scale},
                     {"batch_size", c.batch_size},
                     {"max_len", c.max_len}};
}

/// Missing keys keep their defaults, so partial configs are accepted.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  auto opt = [&](const char* k, auto& field) {
    if (j.contains(k)) j.at(k).get_to(field);
  };
  opt("epochs", c.epochs);
  opt("seed", c.seed);
  opt("learning_rate", c.learning_rate);
  opt("rms_decay", c.rms_decay);
  opt("rms_epsilon", c.rms_epsilon);
  opt("num_layers", c.num_layers);
  opt("hidden_size", c.hidden_size);
  opt("clip_norm", c.clip_norm);
  opt("teacher_forcing_prob", c.teacher_forcing_prob);
  opt("gumbel_tau", c.gumbel_tau);
  opt("validation_every", c.validation_every);
  opt("init_scale", c.init_scale);
  opt("batch_size", c.batch_size);
  opt("max_len", c.max_len);
}

// ---------------------------------------------------------------------------
// Gumbel-Softmax

/// Gumbel(0, 1) noise shaped like `logits`.
inline Matrix gumbel_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix g(rows, cols);
  for (auto& v : g.values()) v = rng.gumbel();
  return g;
}

/// y = softmax((log pi + g) / tau) row-wise, where log pi = log_softmax(logits).
inline Var gumbel_softmax(Var logits, double tau, const Matrix& noise) {
  if (!(tau > 0)) {
    throw Error(errc::kNonPositiveTemperature, "Gumbel-Softmax temperature must be positive");
  }
  Var log_pi = ad::log_softmax_rows(logits);
  Var perturbed = ad::add(log_pi, logits.tape().constant(noise));
  return ad::softmax_rows(ad::scale(perturbed, 1.0 / tau));
}

inline Var gumbel_softmax(Var logits, double tau, Rng& rng) {
  return gumbel_softmax(logits, tau, gumbel_noise(logits.rows(), logits.cols(), rng));
}

/// Hard Gumbel-max sample: argmax_i (log pi_i + g_i) per row.
inline std::vector<std::size_t> gumbel_argmax(const Matrix& logits, const Matrix& noise) {
  std::vector<std::size_t> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    double mx = *std::max_element(row.begin(), row.end());
    double lse = 0;
    for (double v : row) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < row.size(); ++c) {
      double v = row[c] - lse + noise(r, c);
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out[r] = best;
  }
  return out;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---------------------------------------------------------------------------
// Parameters

struct GeneratorParams {
  nn::LstmStack encoder;
  nn::LstmStack decoder;
  nn::Linear head_activity;     // hidden -> |A| + 1
  nn::Linear head_numeric;      // hidden -> #numeric + 1 (elapsed)
  std::optional<nn::Linear> head_categorical;  // hidden -> sum of vocab sizes

  ParamRefs parameters() {
    ParamRefs out = encoder.parameters();
    auto add = [&](ParamRefs p) { out.insert(out.end(), p.begin(), p.end()); };
    add(decoder.parameters());
    add(head_activity.parameters());
    add(head_numeric.parameters());
    if (head_categorical) add(head_categorical->parameters());
    return out;
  }
};

struct DiscriminatorParams {
  nn::LstmStack lstm;
  nn::Linear head;  // hidden -> 1

  ParamRefs parameters() {
    ParamRefs out = lstm.parameters();
    auto h = head.parameters();
    out.insert(out.end(), h.begin(), h.end());
    return out;
  }
};

/// Generator, discriminator, the schema they were built for and the
/// training configuration. Parameters are referenced by pointer during a
/// training run, so a model must not be moved while one is in progress.
struct GanModel {
  EncodingSchema schema;
  TrainConfig config;
  std::size_t max_len = 0;
  GeneratorParams gen;
  DiscriminatorParams disc;

  static GanModel create(const EncodingSchema& schema, const TrainConfig& config) {
    config.validate();
    GanModel m;
    m.schema = schema;
    m.config = config;
    m.max_len = config.max_len;
    Rng rng(config.seed);
    const std::size_t w = schema.vector_width();
    const std::size_t h = config.hidden_size;
    const double s = config.init_scale;
    m.gen.encoder = nn::LstmStack::create("gen.encoder", w, h, config.num_layers, s, rng);
    m.gen.decoder = nn::LstmStack::create("gen.decoder", w, h, config.num_layers, s, rng);
    m.gen.head_activity = nn::Linear::create("gen.head_activity", h, schema.num_activities() + 1, s, rng);
    m.gen.head_numeric = nn::Linear::create("gen.head_numeric", h, schema.num_numeric() + 1, s, rng);
    if (schema.categorical_width() > 0) {
      m.gen.head_categorical =
          nn::Linear::create("gen.head_categorical", h, schema.categorical_width(), s, rng);
    }
    m.disc.lstm = nn::LstmStack::create("disc.lstm", w, h, config.num_layers, s, rng);
    m.disc.head = nn::Linear::create("disc.head", h, 1, s, rng);
    return m;
  }

  ParamRefs parameters() {
    ParamRefs out = gen.parameters();
    auto d = disc.parameters();
    out.insert(out.end(), d.begin(), d.end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// Forward passes

struct BoundGenerator {
  nn::BoundLstm encoder;
  nn::BoundLstm decoder;
  nn::BoundLinear head_activity;
  nn::BoundLinear head_numeric;
  std::optional<nn::BoundLinear> head_categorical;
};

inline BoundGenerator bind(Tape& t, GeneratorParams& g, bool trainable) {
  BoundGenerator b{nn::bind(t, g.encoder, trainable), nn::bind(t, g.decoder, trainable),
                   nn::bind(t, g.head_activity, trainable), nn::bind(t, g.head_numeric, trainable),
                   std::nullopt};
  if (g.head_categorical) b.head_categorical = nn::bind(t, *g.head_categorical, trainable);
  return b;
}

struct BoundDiscriminator {
  nn::BoundLstm lstm;
  nn::BoundLinear head;
};

inline BoundDiscriminator bind(Tape& t, DiscriminatorParams& d, bool trainable) {
  return {nn::bind(t, d.lstm, trainable), nn::bind(t, d.head, trainable)};
}

/// Runs the encoder over the prefix steps (each B x width) and returns the
/// final per-layer states.
inline nn::LstmState encode_prefix(const BoundGenerator& g, std::span<const Var> prefix) {
  if (prefix.empty()) throw Error(errc::kEmptyPrefix, "prefix must contain at least one event");
  Tape& t = prefix.front().tape();
  auto state = g.encoder.zero_state(t, prefix.front().rows());
  for (const auto& x : prefix) g.encoder.step(x, state);
  return state;
}

enum class DecodeMode { kTrain, kInfer };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::kInfer;
  double tau = 0.75;
  double teacher_forcing_prob = 0.0;
  /// Real suffix steps for teacher forcing (train mode only).
  std::span<const Var> real_suffix;
  std::size_t steps = 0;
  /// Infer mode only: stop once every row has emitted EOS.
  bool stop_at_eos = true;
};

/// Builds the emitted event vector from the decoder's top hidden state.
inline Var emit(const BoundGenerator& g, const EncodingSchema& s, Var h, DecodeMode mode, double tau,
                Rng& rng) {
  Tape& t = h.tape();
  const std::size_t A = s.num_activities();
  Var act_logits = g.head_activity(h);
  Var numeric = ad::sigmoid(g.head_numeric(h));
  std::optional<Var> cat_logits;
  if (g.head_categorical) cat_logits = (*g.head_categorical)(h);

  if (mode == DecodeMode::kTrain) {
    Var act = gumbel_softmax(act_logits, tau, rng);
    std::vector<Var> parts{ad::slice_cols(act, 0, A)};
    std::size_t off = 0;
    for (const auto& [name, vocab] : s.categorical_vocabs) {
      parts.push_back(gumbel_softmax(ad::slice_cols(*cat_logits, off, vocab.size()), tau, rng));
      off += vocab.size();
    }
    parts.push_back(numeric);
    parts.push_back(ad::slice_cols(act, A, 1));
    return ad::concat_cols(parts);
  }

  // Hard emissions: one-hot argmax per block, sigmoid values for numerics.
  const std::size_t B = h.rows();
  Matrix out(B, s.vector_width());
  const Matrix& al = act_logits.value();
  const Matrix& nv = numeric.value();
  for (std::size_t r = 0; r < B; ++r) {
    std::size_t a = argmax(al.row(r));
    out(r, a == A ? s.eos_index() : a) = 1.0;
    std::size_t off = 0, col = s.categorical_offset();
    for (const auto& [name, vocab] : s.categorical_vocabs) {
      auto row = cat_logits->value().row(r).subspan(off, vocab.size());
      out(r, col + argmax(row)) = 1.0;
      off += vocab.size();
      col += vocab.size();
    }
    for (std::size_t k = 0; k < nv.cols(); ++k) out(r, s.numeric_offset() + k) = nv(r, k);
  }
  return t.constant(std::move(out));
}

/// Iterates the decoder from an encoder state. The first input is
/// `first_input` (the last prefix vector). In train mode, each next input
/// is the real suffix step with probability teacher_forcing_prob (one coin
/// per step for the whole batch), else the emission itself.
inline std::vector<Var> decode_suffix(const BoundGenerator& g, const EncodingSchema& s,
                                      nn::LstmState state, Var first_input, const DecodeOptions& opt,
                                      Rng& rng) {
  std::vector<Var> out;
  Var x = first_input;
  const std::size_t eos = s.eos_index();
  std::vector<bool> finished(first_input.rows(), false);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    Var h = g.decoder.step(x, state);
    Var y = emit(g, s, h, opt.mode, opt.tau, rng);
    out.push_back(y);
    if (opt.mode == DecodeMode::kTrain) {
      bool force = step < opt.real_suffix.size() && rng.bernoulli(opt.teacher_forcing_prob);
      x = force ? opt.real_suffix[step] : y;
    } else {
      bool all_done = true;
      for (std::size_t r = 0; r < finished.size(); ++r) {
        if (y.value()(r, eos) > 0.5) finished[r] = true;
        all_done = all_done && finished[r];
      }
      if (all_done && opt.stop_at_eos) break;
      x = y;
    }
  }
  return out;
}

/// Probability that suffix is real for the given prefix, shape B x 1.
inline Var discriminator_forward(const BoundDiscriminator& d, std::span<const Var> prefix,
                                 std::span<const Var> suffix) {
  Tape& t = suffix.front().tape();
  auto state = d.lstm.zero_state(t, suffix.front().rows());
  Var h;
  for (const auto& x : prefix) h = d.lstm.step(x, state);
  for (const auto& x : suffix) h = d.lstm.step(x, state);
  return ad::sigmoid(d.head(h));
}

/// Splits a (rows x width) sequence matrix into per-step 1 x width constants.
inline std::vector<Var> steps_of(Tape& t, const Matrix& seq) {
  std::vector<Var> out;
  for (std::size_t r = 0; r < seq.rows(); ++r) out.push_back(t.constant(slice_rows(seq, r, 1)));
  return out;
}

/// Scores one prefix/suffix pair. Rows after the first EOS row of the suffix
/// are ignored, so padding after EOS never changes the score.
inline double discriminator_score(GanModel& m, const Matrix& prefix, const Matrix& suffix) {
  if (suffix.rows() == 0) throw Error(errc::kEmptyInput, "suffix must be nonempty");
  std::size_t keep = suffix.rows();
  for (std::size_t r = 0; r < suffix.rows(); ++r) {
    if (suffix(r, m.schema.eos_index()) > 0.5) {
      keep = r + 1;
      break;
    }
  }
  Tape t;
  auto d = bind(t, m.disc, false);
  auto pre = steps_of(t, prefix);
  auto suf = steps_of(t, slice_rows(suffix, 0, keep));
  return discriminator_forward(d, pre, suf).item();
}

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kScoreEpsilon = 1e-7;

/// Discriminator loss, mean over the batch:
///   -log D(real) - log(1 - D(fake))
inline Var discriminator_loss(Var d_real, Var d_fake) {
  Var r = ad::clamp(d_real, kScoreEpsilon, 1 - kScoreEpsilon);
  Var f = ad::clamp(d_fake, kScoreEpsilon, 1 - kScoreEpsilon);
  Var one_minus_f = ad::add_scalar(ad::scale(f, -1.0), 1.0);
  return ad::mean(ad::scale(ad::add(ad::log(r), ad::log(one_minus_f)), -1.0));
}

/// Generator loss, mean over the batch: -log(D(fake) / (1 - D(fake))).
inline Var generator_loss(Var d_fake) {
  Var f = ad::clamp(d_fake, kScoreEpsilon, 1 - kScoreEpsilon);
  Var one_minus_f = ad::add_scalar(ad::scale(f, -1.0), 1.0);
  return ad::mean(ad::sub(ad::log(one_minus_f), ad::log(f)));
}

// ---------------------------------------------------------------------------
// Inference and evaluation

inline std::size_t default_max_len(const DatasetBundle& b) {
  std::size_t longest = 1;
  for (const auto& p : b.train.partitions) longest = std::max(longest, p.suffix_len);
  return 2 * longest;
}

/// Infer-mode decoding for a batch of equally long prefixes. Returns one
/// matrix per prefix holding the emitted rows up to and including EOS (or
/// max_len rows when EOS never came).
inline std::vector<Matrix> generate_batch(GanModel& m, const std::vector<Matrix>& prefixes) {
  if (prefixes.empty()) return {};
  const std::size_t k = prefixes.front().rows();
  if (k == 0) throw Error(errc::kEmptyPrefix, "prefix must contain at least one event");
  const std::size_t B = prefixes.size(), W = m.schema.vector_width();
  Tape t;
  auto g = bind(t, m.gen, false);
  std::vector<Var> steps;
  for (std::size_t s = 0; s < k; ++s) {
    Matrix x(B, W);
    for (std::size_t b = 0; b < B; ++b) {
      if (prefixes[b].rows() != k || prefixes[b].cols() != W) {
        throw Error(errc::kShapeMismatch, "prefixes in a batch must share their shape");
      }
      std::copy(prefixes[b].row(s).begin(), prefixes[b].row(s).end(), x.row(b).begin());
    }
    steps.push_back(t.constant(std::move(x)));
  }
  auto state = encode_prefix(g, steps);
  Rng unused(0);
  DecodeOptions opt;
  opt.mode = DecodeMode::kInfer;
  opt.steps = std::max<std::size_t>(m.max_len, 1);
  auto out = decode_suffix(g, m.schema, std::move(state), steps.back(), opt, unused);

  std::vector<Matrix> result;
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> rows;
    std::size_t n = 0;
    for (const auto& y : out) {
      auto row = y.value().row(b);
      rows.insert(rows.end(), row.begin(), row.end());
      ++n;
      if (row[m.schema.eos_index()] > 0.5) break;
    }
    result.emplace_back(n, W, std::move(rows));
  }
  return result;
}

/// Activity labels and normalized elapsed values of a sequence, stopping
/// before the first EOS row.
struct SuffixReading {
  std::vector<std::string> activities;
  std::vector<double> elapsed;
};

inline SuffixReading read_suffix(const Matrix& seq, const EncodingSchema& s) {
  SuffixReading out;
  for (std::size_t r = 0; r < seq.rows(); ++r) {
    auto d = decode_vector(seq.row(r), s);
    if (d.eos) break;
    out.activities.push_back(d.activity);
    out.elapsed.push_back(d.elapsed_normalized);
  }
  return out;
}

/// Predicts every pair of a split and scores it: similarity over activity
/// labels (EOS excluded), absolute error of normalized elapsed values over
/// the first min(|predicted|, |real|) positions.
inline EvalReport evaluate(GanModel& m, const Split& split) {
  std::vector<PairRecord> records;
  for (const auto& part : split.partitions) {
    std::vector<Matrix> prefixes;
    for (const auto& p : part.pairs) prefixes.push_back(p.prefix);
    auto generated = generate_batch(m, prefixes);
    for (std::size_t b = 0; b < part.pairs.size(); ++b) {
      auto pred = read_suffix(generated[b], m.schema);
      auto real = read_suffix(part.pairs[b].suffix, m.schema);
      PairRecord rec;
      rec.case_id = part.pairs[b].case_id;
      rec.prefix_len = part.prefix_len;
      rec.similarity = similarity(pred.activities, real.activities);
      std::size_t n = std::min(pred.elapsed.size(), real.elapsed.size());
      for (std::size_t i = 0; i < n; ++i) rec.abs_errors.push_back(std::abs(real.elapsed[i] - pred.elapsed[i]));
      rec.predicted = std::move(pred.activities);
      rec.real = std::move(real.activities);
      records.push_back(std::move(rec));
    }
  }
  return EvalReport::from_pairs(std::move(records));
}

struct PredictedEvent {
  std::string activity;
  Timestamp timestamp = 0;
  double elapsed_seconds = 0;
};

/// Predicts the remainder of an ongoing case. Elapsed times are
/// denormalized and accumulated onto the last prefix timestamp.
inline std::vector<PredictedEvent> predict_suffix(GanModel& m, const std::vector<RawEvent>& prefix,
                                                  const std::map<std::string, AttributeValue>& attrs) {
  if (prefix.empty()) throw Error(errc::kEmptyPrefix, "prefix must contain at least one event");
  Matrix encoded = encode_events(prefix, attrs, m.schema);
  auto generated = generate_batch(m, {encoded}).front();
  std::vector<PredictedEvent> out;
  Timestamp t = prefix.back().timestamp;
  for (std::size_t r = 0; r < generated.rows(); ++r) {
    auto d = decode_vector(generated.row(r), m.schema);
    if (d.eos) break;
    double secs = std::max(0.0, d.elapsed_seconds);
    t += static_cast<Timestamp>(std::llround(secs));
    out.push_back({d.activity, t, secs});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_d = 0;
  double loss_g = 0;
  std::optional<double> val_similarity;
  std::optional<double> val_mae;
  bool improved = false;
};

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,loss_d,loss_g,val_similarity,val_mae,checkpoint\n";
  char buf[256];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", h.epoch, h.loss_d, h.loss_g);
    out += buf;
    if (h.val_similarity) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,", *h.val_similarity, *h.val_mae);
      out += buf;
    } else {
      out += ",,";
    }
    out += h.improved ? "1\n" : "0\n";
  }
  return out;
}

struct TrainResult {
  GanModel model;  // best validation checkpoint, or the final state
  std::vector<EpochRecord> history;
  std::optional<std::size_t> best_epoch;
  std::optional<double> best_val_similarity;
  std::optional<double> best_val_mae;
};

struct TrainHooks {
  /// Called after every epoch.
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called whenever validation improves, with the model at that point.
  std::function<void(const GanModel&, const EpochRecord&)> on_checkpoint;
};

/// One adversarial update on a mini-batch. Returns (L_D, L_G).
class Trainer {
 public:
  explicit Trainer(GanModel& m)
      : m_(m),
        gen_params_(m.gen.parameters()),
        disc_params_(m.disc.parameters()),
        gen_opt_(gen_params_, {m.config.learning_rate, m.config.rms_decay, m.config.rms_epsilon}),
        disc_opt_(disc_params_, {m.config.learning_rate, m.config.rms_decay, m.config.rms_epsilon}),
        rng_(m.config.seed ^ 0x9e3779b97f4a7c15ULL) {}

  Rng& rng() { return rng_; }

  std::pair<double, double> step(const std::vector<Matrix>& prefix_steps,
                                 const std::vector<Matrix>& suffix_steps) {
    const auto& cfg = m_.config;

    // Generator forward, kept on its own tape for the generator update.
    Tape gt;
    auto g = bind(gt, m_.gen, true);
    std::vector<Var> pre_g, real_g;
    for (const auto& x : prefix_steps) pre_g.push_back(gt.constant(x));
    for (const auto& x : suffix_steps) real_g.push_back(gt.constant(x));
    auto state = encode_prefix(g, pre_g);
    DecodeOptions opt;
    opt.mode = DecodeMode::kTrain;
    opt.tau = cfg.gumbel_tau;
    opt.teacher_forcing_prob = cfg.teacher_forcing_prob;
    opt.real_suffix = real_g;
    opt.steps = suffix_steps.size();
    auto fake = decode_suffix(g, m_.schema, std::move(state), pre_g.back(), opt, rng_);

    // Discriminator update on detached fakes; the generator stays fixed.
    double loss_d = 0;
    {
      Tape dt;
      auto d = bind(dt, m_.disc, true);
      std::vector<Var> pre, real, fk;
      for (const auto& x : prefix_steps) pre.push_back(dt.constant(x));
      for (const auto& x : suffix_steps) real.push_back(dt.constant(x));
      for (const auto& y : fake) fk.push_back(dt.constant(y.value()));
      Var ld = discriminator_loss(discriminator_forward(d, pre, real), discriminator_forward(d, pre, fk));
      ad::zero_grads(disc_params_);
      dt.backward(ld);
      ad::clip_grad_norm(disc_params_, cfg.clip_norm);
      disc_opt_.step();
      loss_d = ld.item();
    }

    // Generator update through the (frozen) updated discriminator.
    auto d = bind(gt, m_.disc, false);
    Var lg = generator_loss(discriminator_forward(d, pre_g, fake));
    ad::zero_grads(gen_params_);
    gt.backward(lg);
    ad::clip_grad_norm(gen_params_, cfg.clip_norm);
    gen_opt_.step();
    return {loss_d, lg.item()};
  }

 private:
  GanModel& m_;
  ParamRefs gen_params_;
  ParamRefs disc_params_;
  ad::RmsProp gen_opt_;
  ad::RmsProp disc_opt_;
  Rng rng_;
};

namespace detail {

struct Batch {
  std::vector<Matrix> prefix_steps;
  std::vector<Matrix> suffix_steps;
};

inline Batch make_batch(const Partition& part, std::span<const std::size_t> rows) {
  Batch b;
  const std::size_t W = part.pairs.front().prefix.cols();
  auto gather = [&](std::size_t t, bool prefix) {
    Matrix m(rows.size(), W);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& src = prefix ? part.pairs[rows[i]].prefix : part.pairs[rows[i]].suffix;
      std::copy(src.row(t).begin(), src.row(t).end(), m.row(i).begin());
    }
    return m;
  };
  for (std::size_t t = 0; t < part.prefix_len; ++t) b.prefix_steps.push_back(gather(t, true));
  for (std::size_t t = 0; t < part.suffix_len; ++t) b.suffix_steps.push_back(gather(t, false));
  return b;
}

inline void copy_values(GanModel& dst, GanModel& src) {
  auto d = dst.parameters();
  auto s = src.parameters();
  for (std::size_t i = 0; i < d.size(); ++i) d[i]->value = s[i]->value;
}

}  // namespace detail

/// Adversarial training. Each epoch visits the training partitions in a
/// seeded shuffled order, splitting each into shuffled mini-batches. For
/// every batch: discriminator update (zero, backward, clip, step), then
/// generator update through the frozen discriminator. Every
/// `validation_every` epochs the generator is evaluated on the validation
/// split and kept if its mean similarity beats the best so far.
inline TrainResult train(const TrainConfig& config, const DatasetBundle& bundle,
                         const TrainHooks& hooks = {}) {
  if (bundle.train.partitions.empty()) throw Error(errc::kEmptyInput, "training split has no pairs");
  TrainConfig cfg = config;
  if (cfg.max_len == 0) cfg.max_len = default_max_len(bundle);

  TrainResult result{GanModel::create(bundle.schema, cfg), {}, std::nullopt, std::nullopt, std::nullopt};
  GanModel& model = result.model;
  std::optional<GanModel> best;
  Trainer trainer(model);
  Rng& rng = trainer.rng();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(bundle.train.partitions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    double sum_d = 0, sum_g = 0;
    std::size_t batches = 0;
    for (std::size_t pi : order) {
      const auto& part = bundle.train.partitions[pi];
      std::vector<std::size_t> rows(part.pairs.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      rng.shuffle(rows);
      std::size_t bs = cfg.batch_size == 0 ? rows.size() : cfg.batch_size;
      for (std::size_t start = 0; start < rows.size(); start += bs) {
        std::size_t n = std::min(bs, rows.size() - start);
        auto batch = detail::make_batch(part, std::span(rows).subspan(start, n));
        try {
          auto [ld, lg] = trainer.step(batch.prefix_steps, batch.suffix_steps);
          sum_d += ld;
          sum_g += lg;
        } catch (const Error& e) {
          if (e.code() != errc::kNonFiniteValue) throw;
          auto details = e.details();
          details["epoch"] = std::to_string(epoch);
          details["partition"] = std::to_string(part.prefix_len) + "/" + std::to_string(part.suffix_len);
          throw Error(e.code(), std::string("training diverged: ") + e.what(), details);
        }
        ++batches;
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_d = sum_d / static_cast<double>(batches);
    rec.loss_g = sum_g / static_cast<double>(batches);
    if (epoch % cfg.validation_every == 0 && bundle.validation.num_pairs() > 0) {
      auto report = evaluate(model, bundle.validation);
      rec.val_similarity = report.mean_similarity;
      rec.val_mae = report.mae_normalized;
      // Ties on similarity go to the lower elapsed-time error.
      bool better = !result.best_val_similarity ||
                    report.mean_similarity > *result.best_val_similarity ||
                    (report.mean_similarity == *result.best_val_similarity &&
                     report.mae_normalized < *result.best_val_mae);
      if (better) {
        rec.improved = true;
        result.best_epoch = epoch;
        result.best_val_similarity = report.mean_similarity;
        result.best_val_mae = report.mae_normalized;
        if (!best) best = GanModel::create(bundle.schema, cfg);
        detail::copy_values(*best, model);
        if (hooks.on_checkpoint) hooks.on_checkpoint(*best, rec);
      }
    }
    result.history.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  if (best) detail::copy_values(model, *best);
  return result;
}

}  // namespace ocelgan::gan
