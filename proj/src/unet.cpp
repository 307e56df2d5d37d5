#include "floodal/unet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "floodal/csv.hpp"
#include "floodal/errors.hpp"
#include "floodal/parallel.hpp"

namespace floodal {

using json = nlohmann::ordered_json;

void UNetConfig::validate() const {
  if (in_channels < 1) throw ConfigError("unet: in_channels must be >= 1");
  if (depth < 1) throw ConfigError("unet: depth must be >= 1");
  if (base_channels < 1) throw ConfigError("unet: base_channels must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw ConfigError("unet: dropout_rate must be in [0,1)");
}

void UNet::build_layout() {
  const int d = config_.depth;
  auto add = [&](std::vector<int> wshape, const std::string& name) {
    LayerRef ref;
    ref.w = static_cast<int>(params_.size());
    params_.emplace_back(wshape, name + ".weight");
    ref.b = static_cast<int>(params_.size());
    const int cout = name.find("tconv") != std::string::npos ? wshape[1] : wshape[0];
    params_.emplace_back(std::vector<int>{cout}, name + ".bias");
    return ref;
  };

  enc_c1_.resize(d);
  enc_c2_.resize(d);
  int ch = config_.in_channels;
  for (int i = 0; i < d; ++i) {
    const int out = config_.base_channels << i;
    enc_c1_[i] = add({out, ch, 3, 3}, "enc" + std::to_string(i) + ".conv1");
    enc_c2_[i] = add({out, out, 3, 3}, "enc" + std::to_string(i) + ".conv2");
    ch = out;
  }
  const int bott = config_.base_channels << d;
  bott_c1_ = add({bott, ch, 3, 3}, "bottleneck.conv1");
  bott_c2_ = add({bott, bott, 3, 3}, "bottleneck.conv2");

  dec_t_.resize(d);
  dec_c1_.resize(d);
  dec_c2_.resize(d);
  for (int i = d - 1; i >= 0; --i) {
    const int out = config_.base_channels << i;
    const int in = out * 2;  // bottleneck or the decoder level above
    dec_t_[i] = add({in, out, 2, 2}, "dec" + std::to_string(i) + ".tconv");
    dec_c1_[i] = add({out, 2 * out, 3, 3}, "dec" + std::to_string(i) + ".conv1");
    dec_c2_[i] = add({out, out, 3, 3}, "dec" + std::to_string(i) + ".conv2");
  }
  final_ = add({1, config_.base_channels, 1, 1}, "head.conv");
}

UNet::UNet(UNetConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  build_layout();
  // Kaiming-uniform fan-in init for weights, zero biases. For the transposed
  // convolution each output pixel receives one tap per input channel, so its
  // fan-in is Cin.
  Rng rng(derive_seed(seed, "unet-init"));
  for (auto& p : params_) {
    if (p.name.ends_with(".bias")) continue;
    const auto& s = p.value.shape;
    double fan_in;
    if (p.name.find("tconv") != std::string::npos)
      fan_in = static_cast<double>(s[0]);
    else
      fan_in = static_cast<double>(s[1]) * s[2] * s[3];
    const double bound = std::sqrt(6.0 / fan_in);
    for (auto& v : p.value.data)
      v = static_cast<float>(rng.uniform(-bound, bound));
  }
}

std::size_t UNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

const TensorD& UNet::forward(const TensorD& input, Rng* dropout_rng,
                             UNetWorkspace& ws) const {
  if (input.shape.size() != 3 || input.dim(0) != config_.in_channels)
    throw RuntimeFailure("unet: input channels do not match config");
  const int div = 1 << config_.depth;
  if (input.dim(1) % div != 0 || input.dim(2) % div != 0)
    throw RuntimeFailure("unet: spatial dims must be divisible by 2^depth");

  const int d = config_.depth;
  ws.enc_a1.resize(d);
  ws.enc_a2.resize(d);
  ws.pooled.resize(d);
  ws.pool_argmax.resize(d);
  ws.up.resize(d);
  ws.cat.resize(d);
  ws.dec_a1.resize(d);
  ws.dec_a2.resize(d);
  ws.input = input;

  auto conv = [&](const TensorD& x, const LayerRef& l) {
    return conv2d_forward(x, params_[l.w].value, params_[l.b].value);
  };

  const TensorD* cur = &ws.input;
  for (int i = 0; i < d; ++i) {
    ws.enc_a1[i] = relu_forward(conv(*cur, enc_c1_[i]));
    ws.enc_a2[i] = relu_forward(conv(ws.enc_a1[i], enc_c2_[i]));
    ws.pooled[i] = maxpool2_forward(ws.enc_a2[i], ws.pool_argmax[i]);
    cur = &ws.pooled[i];
  }
  ws.bott_a1 = relu_forward(conv(*cur, bott_c1_));
  ws.bott_a2 = relu_forward(conv(ws.bott_a1, bott_c2_));
  cur = &ws.bott_a2;
  for (int i = d - 1; i >= 0; --i) {
    ws.up[i] = transposed_conv2_forward(*cur, params_[dec_t_[i].w].value,
                                        params_[dec_t_[i].b].value);
    ws.cat[i] = concat_channels(ws.up[i], ws.enc_a2[i]);
    ws.dec_a1[i] = relu_forward(conv(ws.cat[i], dec_c1_[i]));
    ws.dec_a2[i] = relu_forward(conv(ws.dec_a1[i], dec_c2_[i]));
    cur = &ws.dec_a2[i];
  }
  if (dropout_rng != nullptr) {
    ws.dropped = spatial_dropout_forward(*cur, config_.dropout_rate,
                                         *dropout_rng, ws.dropout_mask);
    ws.dropout_applied = true;
    cur = &ws.dropped;
  } else {
    ws.dropout_applied = false;
  }
  ws.prob = sigmoid_forward(conv(*cur, final_));
  return ws.prob;
}

TensorD UNet::forward_frozen(const TensorD& input,
                             const UNetWorkspace& pattern) const {
  const int d = config_.depth;
  auto conv = [&](const TensorD& x, const LayerRef& l) {
    return conv2d_forward(x, params_[l.w].value, params_[l.b].value);
  };
  auto masked_relu = [](TensorD z, const TensorD& support) {
    for (std::size_t i = 0; i < z.numel(); ++i)
      if (!(support.data[i] > 0.0f)) z.data[i] = 0.0f;
    return z;
  };
  auto frozen_pool = [](const TensorD& x, const std::vector<int>& argmax) {
    const int c = x.dim(0), oh = x.dim(1) / 2, ow = x.dim(2) / 2;
    TensorD out({c, oh, ow});
    const std::size_t per = static_cast<std::size_t>(oh) * ow;
    const std::size_t in_per = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
    for (int ci = 0; ci < c; ++ci)
      for (std::size_t i = 0; i < per; ++i)
        out.data[ci * per + i] = x.data[ci * in_per + argmax[ci * per + i]];
    return out;
  };

  std::vector<TensorD> skips(d);
  TensorD cur = input;
  for (int i = 0; i < d; ++i) {
    TensorD a1 = masked_relu(conv(cur, enc_c1_[i]), pattern.enc_a1[i]);
    skips[i] = masked_relu(conv(a1, enc_c2_[i]), pattern.enc_a2[i]);
    cur = frozen_pool(skips[i], pattern.pool_argmax[i]);
  }
  cur = masked_relu(conv(cur, bott_c1_), pattern.bott_a1);
  cur = masked_relu(conv(cur, bott_c2_), pattern.bott_a2);
  for (int i = d - 1; i >= 0; --i) {
    TensorD up = transposed_conv2_forward(cur, params_[dec_t_[i].w].value,
                                          params_[dec_t_[i].b].value);
    TensorD cat = concat_channels(up, skips[i]);
    TensorD a1 = masked_relu(conv(cat, dec_c1_[i]), pattern.dec_a1[i]);
    cur = masked_relu(conv(a1, dec_c2_[i]), pattern.dec_a2[i]);
  }
  if (pattern.dropout_applied) {
    const float scale =
        static_cast<float>(1.0 / (1.0 - config_.dropout_rate));
    const std::size_t per = cur.numel() / cur.dim(0);
    for (int ci = 0; ci < cur.dim(0); ++ci) {
      float* ch = cur.data.data() + ci * per;
      const float s = pattern.dropout_mask[ci] ? scale : 0.0f;
      for (std::size_t i = 0; i < per; ++i) ch[i] *= s;
    }
  }
  return sigmoid_forward(conv(cur, final_));
}

void UNet::backward(const UNetWorkspace& ws, const TensorD& grad_prob,
                    std::span<TensorD> param_grads) const {
  const int d = config_.depth;
  TensorD gw, gb, gin;
  auto conv_bw = [&](const TensorD& x, const LayerRef& l, const TensorD& gout,
                     TensorD& ginput) {
    conv2d_backward(x, params_[l.w].value, gout, ginput, gw, gb);
    for (std::size_t j = 0; j < gw.numel(); ++j)
      param_grads[l.w].data[j] += gw.data[j];
    for (std::size_t j = 0; j < gb.numel(); ++j)
      param_grads[l.b].data[j] += gb.data[j];
  };

  TensorD delta = sigmoid_backward(grad_prob, ws.prob);
  const TensorD& head_in = ws.dropout_applied ? ws.dropped : ws.dec_a2[0];
  TensorD dcur;
  conv_bw(head_in, final_, delta, dcur);
  if (ws.dropout_applied)
    dcur = spatial_dropout_backward(dcur, ws.dropout_mask,
                                    config_.dropout_rate);

  std::vector<TensorD> dskip(d);
  for (int i = 0; i < d; ++i) {  // decoder levels, nearest to the head first
    TensorD da2 = relu_backward(dcur, ws.dec_a2[i]);
    TensorD da1;
    conv_bw(ws.dec_a1[i], dec_c2_[i], da2, da1);
    da1 = relu_backward(da1, ws.dec_a1[i]);
    TensorD dcat;
    conv_bw(ws.cat[i], dec_c1_[i], da1, dcat);
    TensorD dup(ws.up[i].shape);
    dskip[i] = TensorD(ws.enc_a2[i].shape);
    concat_channels_backward(dcat, dup, dskip[i]);
    const TensorD& tin = i == d - 1 ? ws.bott_a2 : ws.dec_a2[i + 1];
    transposed_conv2_backward(tin, params_[dec_t_[i].w].value, dup, dcur, gw,
                              gb);
    for (std::size_t j = 0; j < gw.numel(); ++j)
      param_grads[dec_t_[i].w].data[j] += gw.data[j];
    for (std::size_t j = 0; j < gb.numel(); ++j)
      param_grads[dec_t_[i].b].data[j] += gb.data[j];
  }

  TensorD db2 = relu_backward(dcur, ws.bott_a2);
  TensorD db1;
  conv_bw(ws.bott_a1, bott_c2_, db2, db1);
  db1 = relu_backward(db1, ws.bott_a1);
  conv_bw(ws.pooled[d - 1], bott_c1_, db1, dcur);

  for (int i = d - 1; i >= 0; --i) {
    TensorD da2 =
        maxpool2_backward(dcur, ws.pool_argmax[i], ws.enc_a2[i].shape);
    for (std::size_t j = 0; j < da2.numel(); ++j)
      da2.data[j] += dskip[i].data[j];
    da2 = relu_backward(da2, ws.enc_a2[i]);
    TensorD da1;
    conv_bw(ws.enc_a1[i], enc_c2_[i], da2, da1);
    da1 = relu_backward(da1, ws.enc_a1[i]);
    const TensorD& cin = i == 0 ? ws.input : ws.pooled[i - 1];
    conv_bw(cin, enc_c1_[i], da1, dcur);
  }
}

namespace {
constexpr char kCheckpointMagic[4] = {'F', 'C', 'K', '1'};
}

void UNet::save(const std::filesystem::path& path) const {
  json header;
  header["format"] = "floodal-checkpoint";
  header["version"] = 1;
  header["config"] = {{"in_channels", config_.in_channels},
                      {"depth", config_.depth},
                      {"base_channels", config_.base_channels},
                      {"dropout_rate", config_.dropout_rate}};
  json layers = json::array();
  for (const auto& p : params_)
    layers.push_back({{"name", p.name}, {"shape", p.value.shape}});
  header["parameters"] = layers;
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(kCheckpointMagic, 4);
  const std::uint32_t len = static_cast<std::uint32_t>(head.size());
  unsigned char lb[4] = {static_cast<unsigned char>(len & 0xff),
                         static_cast<unsigned char>((len >> 8) & 0xff),
                         static_cast<unsigned char>((len >> 16) & 0xff),
                         static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lb), 4);
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& p : params_)
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.numel() * 4));
  if (!out) throw DataError("write failed: " + path.string());
}

UNet UNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw DataError("bad magic: " + path.string());
  unsigned char lb[4];
  if (!in.read(reinterpret_cast<char*>(lb), 4))
    throw DataError("truncated checkpoint: " + path.string());
  const std::uint32_t len = static_cast<std::uint32_t>(lb[0]) |
                            (static_cast<std::uint32_t>(lb[1]) << 8) |
                            (static_cast<std::uint32_t>(lb[2]) << 16) |
                            (static_cast<std::uint32_t>(lb[3]) << 24);
  std::string head(len, '\0');
  if (!in.read(head.data(), len))
    throw DataError("truncated checkpoint: " + path.string());
  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    throw DataError("malformed checkpoint header: " + std::string(e.what()));
  }
  UNetConfig cfg;
  cfg.in_channels = header["config"]["in_channels"].get<int>();
  cfg.depth = header["config"]["depth"].get<int>();
  cfg.base_channels = header["config"]["base_channels"].get<int>();
  cfg.dropout_rate = header["config"]["dropout_rate"].get<double>();
  UNet net(cfg, 0);
  const auto& layers = header["parameters"];
  if (layers.size() != net.params_.size())
    throw DataError("checkpoint layer count does not match architecture");
  for (std::size_t i = 0; i < net.params_.size(); ++i) {
    auto& p = net.params_[i];
    const auto shape = layers[i]["shape"].get<std::vector<int>>();
    if (shape != p.value.shape)
      throw DataError("checkpoint shape mismatch for " + p.name);
    if (!in.read(reinterpret_cast<char*>(p.value.data.data()),
                 static_cast<std::streamsize>(p.value.numel() * 4)))
      throw DataError("truncated checkpoint payload: " + path.string());
  }
  return net;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("train: bad learning_rate");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: bad weight_decay");
  if (!(early_stop_delta >= 0.0)) throw ConfigError("train: bad early_stop_delta");
  if (early_stop_patience < 1) throw ConfigError("train: patience must be >= 1");
}

namespace {

struct Sample {
  TensorD input;
  std::vector<std::uint8_t> target;
  std::vector<std::uint8_t> valid;
};

Sample make_sample(const CorpusEntry& entry) {
  Sample s;
  s.input = TensorD({entry.tile.channels, entry.tile.height, entry.tile.width});
  std::copy(entry.tile.pixels.begin(), entry.tile.pixels.end(),
            s.input.data.begin());
  const std::size_t n = entry.mask.classes.size();
  s.target.resize(n);
  s.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.target[i] = entry.mask.classes[i] == kFlood ? 1 : 0;
    s.valid[i] = entry.mask.classes[i] != kNoData ? 1 : 0;
  }
  return s;
}

Sample flipped(const Sample& s, bool flip_h, bool flip_v) {
  if (!flip_h && !flip_v) return s;
  Sample out = s;
  const int c = s.input.dim(0), h = s.input.dim(1), w = s.input.dim(2);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.input.at(ci, flip_v ? h - 1 - y : y, flip_h ? w - 1 - x : x) =
            s.input.at(ci, y, x);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t src = static_cast<std::size_t>(y) * w + x;
      const std::size_t dst =
          static_cast<std::size_t>(flip_v ? h - 1 - y : y) * w +
          (flip_h ? w - 1 - x : x);
      out.target[dst] = s.target[src];
      out.valid[dst] = s.valid[src];
    }
  return out;
}

}  // namespace

TrainResult train(UNet& net, std::span<const CorpusEntry* const> labeled,
                  std::span<const CorpusEntry* const> validation,
                  const TrainConfig& config) {
  config.validate();
  if (labeled.empty()) throw RuntimeFailure("train: no labeled tiles");
  if (validation.empty()) throw RuntimeFailure("train: no validation tiles");

  std::vector<Sample> train_samples;
  train_samples.reserve(labeled.size());
  for (const auto* e : labeled) train_samples.push_back(make_sample(*e));
  std::vector<Sample> val_samples;
  val_samples.reserve(validation.size());
  for (const auto* e : validation) val_samples.push_back(make_sample(*e));

  auto params = net.params();
  AdamW optimizer(params, OptimConfig{config.learning_rate,
                                      config.weight_decay, 0.9, 0.999, 1e-8});
  Rng rng(derive_seed(config.seed, "train-loop"));

  std::vector<TensorD> best_params;
  best_params.reserve(params.size());
  for (const auto& p : params) best_params.push_back(p.value);
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int wait = 0;

  TrainResult result;
  const int jobs = std::max(1, config.jobs);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::size_t bsize = stop - start;

      // All random draws happen on the sequential stream before dispatch.
      struct Slot {
        Sample sample;
        std::uint64_t dropout_seed;
        double loss = 0.0;
        std::vector<TensorD> grads;
      };
      std::vector<Slot> slots(bsize);
      for (std::size_t b = 0; b < bsize; ++b) {
        const Sample& base = train_samples[order[start + b]];
        const bool fh = config.flip_augment && rng.bernoulli(0.5);
        const bool fv = config.flip_augment && rng.bernoulli(0.5);
        slots[b].sample = flipped(base, fh, fv);
        slots[b].dropout_seed = rng.next_u64();
      }
      parallel_for(bsize, jobs, [&](std::size_t b) {
        auto& slot = slots[b];
        slot.grads.reserve(params.size());
        for (const auto& p : params) slot.grads.emplace_back(p.value.shape);
        UNetWorkspace ws;
        Rng drop_rng(slot.dropout_seed);
        const TensorD& prob = net.forward(slot.sample.input, &drop_rng, ws);
        slot.loss = bce_loss(prob, slot.sample.target, slot.sample.valid);
        const TensorD grad =
            bce_backward(prob, slot.sample.target, slot.sample.valid);
        net.backward(ws, grad, slot.grads);
      });

      for (auto& p : params) p.zero_grad();
      const float inv = 1.0f / static_cast<float>(bsize);
      for (std::size_t b = 0; b < bsize; ++b) {
        epoch_loss += slots[b].loss;
        for (std::size_t i = 0; i < params.size(); ++i) {
          auto& dst = params[i].grad.data;
          const auto& src = slots[b].grads[i].data;
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j] * inv;
        }
      }
      optimizer.step(params);
    }
    epoch_loss /= static_cast<double>(train_samples.size());
    if (!std::isfinite(epoch_loss))
      throw RuntimeFailure("train: non-finite training loss at epoch " +
                           std::to_string(epoch));

    // Validation with dropout inactive.
    std::vector<double> val_losses(val_samples.size(), 0.0);
    parallel_for(val_samples.size(), jobs, [&](std::size_t i) {
      UNetWorkspace ws;
      const TensorD& prob = net.forward(val_samples[i].input, nullptr, ws);
      val_losses[i] = bce_loss(prob, val_samples[i].target, val_samples[i].valid);
    });
    double val_loss = 0.0;
    for (double v : val_losses) val_loss += v;
    val_loss /= static_cast<double>(val_samples.size());
    if (!std::isfinite(val_loss))
      throw RuntimeFailure("train: non-finite validation loss at epoch " +
                           std::to_string(epoch));

    EpochStats stats{epoch, epoch_loss, val_loss, false};
    if (val_loss < best_val - config.early_stop_delta) {
      best_val = val_loss;
      best_epoch = epoch;
      wait = 0;
      for (std::size_t i = 0; i < params.size(); ++i)
        best_params[i] = params[i].value;
    } else {
      ++wait;
      if (wait >= config.early_stop_patience) stats.stopped = true;
    }
    result.history.push_back(stats);
    if (stats.stopped) break;
  }

  for (std::size_t i = 0; i < params.size(); ++i)
    params[i].value = best_params[i];
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

StochasticPrediction mc_predict(const UNet& net, const Tile& tile, int T,
                                std::uint64_t seed, int jobs) {
  if (T < 1) throw RuntimeFailure("mc_predict: T must be >= 1");
  TensorD input({tile.channels, tile.height, tile.width});
  std::copy(tile.pixels.begin(), tile.pixels.end(), input.data.begin());

  StochasticPrediction pred;
  pred.T = T;
  pred.height = tile.height;
  pred.width = tile.width;
  pred.passes.resize(T);
  parallel_for(static_cast<std::size_t>(T), jobs, [&](std::size_t t) {
    UNetWorkspace ws;
    Rng rng(derive_seed(seed, "mc-pass", t));
    const TensorD& prob = net.forward(input, &rng, ws);
    pred.passes[t].assign(prob.data.begin(), prob.data.end());
  });

  const std::size_t n = tile.pixel_count();
  pred.calibrated.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int t = 0; t < T; ++t) sum += pred.passes[t][i];
    pred.calibrated[i] = static_cast<float>(sum / T);
  }
  return pred;
}

LabelMask predict_binary(const StochasticPrediction& prediction,
                         double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("predict_binary: threshold must be in (0,1)");
  LabelMask mask;
  mask.height = prediction.height;
  mask.width = prediction.width;
  mask.classes.resize(prediction.calibrated.size());
  for (std::size_t i = 0; i < mask.classes.size(); ++i)
    mask.classes[i] =
        prediction.calibrated[i] >= threshold ? kFlood : kNonFlood;
  return mask;
}

void write_history_csv(const std::filesystem::path& path,
                       const TrainResult& result) {
  CsvWriter csv(path.string());
  csv.row({"epoch", "train_loss", "val_loss", "stopped_flag"});
  for (const auto& e : result.history)
    csv.row({std::to_string(e.epoch), format_double(e.train_loss),
             format_double(e.val_loss), e.stopped ? "1" : "0"});
}

}  // namespace floodal
