#include "featprobe/mapping/network.hpp"

#include <cmath>

#include "featprobe/rng.hpp"

namespace featprobe::mapping {

using nn::Var;

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::kLinear: return "linear";
    case Family::kMlp: return "mlp";
    case Family::kCnn: return "cnn";
    case Family::kTransformer: return "transformer";
  }
  return "linear";
}

Family parse_family(std::string_view name) {
  if (name == "linear") return Family::kLinear;
  if (name == "mlp") return Family::kMlp;
  if (name == "cnn") return Family::kCnn;
  if (name == "transformer") return Family::kTransformer;
  throw Error(ErrorCode::kInvalidParameter, "unknown model family '" + std::string(name) + "'");
}

double ArchConfig::effective_dropout() const {
  if (dropout >= 0.0) return dropout;
  switch (family) {
    case Family::kMlp:
    case Family::kCnn: return 0.2;
    case Family::kTransformer: return 0.1;
    case Family::kLinear: return 0.0;
  }
  return 0.0;
}

void ArchConfig::validate() const {
  if (channels == 0) throw Error(ErrorCode::kInvalidParameter, "channels must be positive");
  if (family != Family::kLinear && hidden == 0) {
    throw Error(ErrorCode::kInvalidParameter, "hidden width must be positive");
  }
  if (effective_dropout() >= 1.0) throw Error(ErrorCode::kInvalidParameter, "dropout must be < 1");
  if (family == Family::kTransformer) {
    if (heads == 0 || hidden % heads != 0) {
      throw Error(ErrorCode::kInvalidParameter, "transformer hidden width must divide by heads");
    }
    if (layers == 0 || ffn == 0) throw Error(ErrorCode::kInvalidParameter, "transformer needs layers and ffn");
    if (grid_h == 0 || grid_w == 0) {
      throw Error(ErrorCode::kInvalidParameter, "transformer needs the token grid for positions");
    }
  }
  if (identity_init && family != Family::kLinear) {
    throw Error(ErrorCode::kInvalidParameter, "identity_init applies to the linear family only");
  }
}

nlohmann::json to_json(const ArchConfig& a) {
  return {{"family", family_name(a.family)},
          {"channels", a.channels},
          {"hidden", a.hidden},
          {"heads", a.heads},
          {"layers", a.layers},
          {"ffn", a.ffn},
          {"dropout", a.effective_dropout()},
          {"grid", {a.grid_h, a.grid_w}},
          {"identity_init", a.identity_init},
          {"init_seed", a.init_seed}};
}

ArchConfig arch_from_json(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "architecture must be an object", pointer);
  ArchConfig a;
  try {
    a.family = parse_family(j.at("family").get<std::string>());
    a.channels = j.at("channels").get<std::size_t>();
    a.hidden = j.value("hidden", a.hidden);
    a.heads = j.value("heads", a.heads);
    a.layers = j.value("layers", a.layers);
    a.ffn = j.value("ffn", a.ffn);
    a.dropout = j.value("dropout", a.dropout);
    if (j.contains("grid")) {
      auto grid = j["grid"].get<std::vector<std::size_t>>();
      if (grid.size() != 2) throw Error(ErrorCode::kSchema, "grid must be [H,W]", pointer + "/grid");
      a.grid_h = grid[0];
      a.grid_w = grid[1];
    }
    a.identity_init = j.value("identity_init", a.identity_init);
    a.init_seed = j.value("init_seed", a.init_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad architecture: ") + e.what(), pointer);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchema) throw;
    throw Error(ErrorCode::kSchema, e.what(), pointer + "/family");
  }
  return a;
}

template <typename T>
MappingNet<T>::MappingNet(ArchConfig arch) : MappingNet(std::move(arch), true) {}

template <typename T>
MappingNet<T>::MappingNet(ArchConfig arch, bool init) : arch_(std::move(arch)) {
  arch_.validate();
  if (init) initialize();
}

template <typename T>
void MappingNet<T>::add(std::string name, BasicTensor<T> value) {
  params_.push_back(nn::make_parameter(std::move(name), std::move(value)));
}

template <typename T>
void MappingNet<T>::initialize() {
  const std::size_t C = arch_.channels, Hd = arch_.hidden;
  std::uint64_t stream = 0;
  // PyTorch-style fan-in uniform bound for both weights and biases.
  auto uniform = [&](Shape shape, std::size_t fan_in) {
    Pcg32 rng(arch_.init_seed, stream++);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    BasicTensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
    return t;
  };
  auto dense = [&](const std::string& name, std::size_t out, std::size_t in) {
    add(name + ".weight", uniform({out, in}, in));
    add(name + ".bias", uniform({out}, in));
  };
  auto norm = [&](const std::string& name, std::size_t dim) {
    add(name + ".weight", BasicTensor<T>(Shape{dim}, T{1}));
    add(name + ".bias", BasicTensor<T>(Shape{dim}, T{0}));
  };

  switch (arch_.family) {
    case Family::kLinear:
      if (arch_.identity_init) {
        BasicTensor<T> eye(Shape{C, C});
        for (std::size_t i = 0; i < C; ++i) eye[i * C + i] = T{1};
        add("linear.weight", std::move(eye));
        add("linear.bias", BasicTensor<T>(Shape{C}));
      } else {
        dense("linear", C, C);
      }
      break;
    case Family::kMlp:
      dense("fc1", Hd, C);
      dense("fc2", C, Hd);
      break;
    case Family::kCnn:
      add("conv1.weight", uniform({Hd, C, 3, 3}, C * 9));
      add("conv1.bias", uniform({Hd}, C * 9));
      norm("bn", Hd);
      add("conv2.weight", uniform({C, Hd, 3, 3}, Hd * 9));
      add("conv2.bias", uniform({C}, Hd * 9));
      bn_.emplace_back(Hd);
      break;
    case Family::kTransformer: {
      dense("in_proj", Hd, C);
      Pcg32 rng(arch_.init_seed, stream++);
      BasicTensor<T> pos(Shape{arch_.grid_h * arch_.grid_w, Hd});
      for (auto& v : pos.data()) v = static_cast<T>(0.02 * rng.normal());
      add("pos_embedding", std::move(pos));
      for (std::size_t l = 0; l < arch_.layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        dense(p + "attn.qkv", 3 * Hd, Hd);
        dense(p + "attn.out", Hd, Hd);
        norm(p + "norm1", Hd);
        dense(p + "ffn1", arch_.ffn, Hd);
        dense(p + "ffn2", Hd, arch_.ffn);
        norm(p + "norm2", Hd);
      }
      dense("out_proj", C, Hd);
      break;
    }
  }
}

template <typename T>
nn::Parameter<T>& MappingNet<T>::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidParameter, "no parameter named '" + std::string(name) + "'");
}

template <typename T>
const nn::Parameter<T>& MappingNet<T>::parameter(std::string_view name) const {
  return const_cast<MappingNet*>(this)->parameter(name);
}

template <typename T>
const Var<T>& MappingNet<T>::var(std::string_view name) const {
  return parameter(name).var;
}

template <typename T>
Var<T> MappingNet<T>::encoder_layer(nn::Tape<T>& tape, const Var<T>& x, std::size_t index) const {
  const std::string p = "layers." + std::to_string(index) + ".";
  const double drop = arch_.effective_dropout();
  auto qkv = nn::dense(tape, x, var(p + "attn.qkv.weight"), var(p + "attn.qkv.bias"));
  auto parts = nn::split_last(tape, qkv, 3);
  auto attended = nn::attention(tape, parts[0], parts[1], parts[2], arch_.heads);
  auto projected = nn::dense(tape, attended, var(p + "attn.out.weight"), var(p + "attn.out.bias"));
  auto h = nn::layernorm(tape, nn::add(tape, x, nn::dropout(tape, projected, drop)),
                         var(p + "norm1.weight"), var(p + "norm1.bias"));
  auto ff = nn::dense(tape, h, var(p + "ffn1.weight"), var(p + "ffn1.bias"));
  ff = nn::dropout(tape, nn::relu(tape, ff), drop);
  ff = nn::dense(tape, ff, var(p + "ffn2.weight"), var(p + "ffn2.bias"));
  return nn::layernorm(tape, nn::add(tape, h, nn::dropout(tape, ff, drop)), var(p + "norm2.weight"),
                       var(p + "norm2.bias"));
}

template <typename T>
Var<T> MappingNet<T>::run(nn::Tape<T>& tape, const Var<T>& x,
                          std::vector<nn::BatchNormState<T>>& bn) const {
  const auto& s = x->value.shape();
  if (s.size() != 4 || s[1] != arch_.channels) {
    throw Error(ErrorCode::kShapeMismatch, "mapping input must be [B," + std::to_string(arch_.channels) +
                                               ",H,W], got " + shape_to_string(s));
  }
  const std::size_t H = s[2], W = s[3];
  const double drop = arch_.effective_dropout();
  switch (arch_.family) {
    case Family::kLinear: {
      auto tokens = nn::to_tokens(tape, x);
      auto y = nn::dense(tape, tokens, var("linear.weight"), var("linear.bias"));
      return nn::from_tokens(tape, y, H, W);
    }
    case Family::kMlp: {
      auto tokens = nn::to_tokens(tape, x);
      auto h = nn::relu(tape, nn::dense(tape, tokens, var("fc1.weight"), var("fc1.bias")));
      h = nn::dropout(tape, h, drop);
      auto y = nn::dense(tape, h, var("fc2.weight"), var("fc2.bias"));
      return nn::from_tokens(tape, y, H, W);
    }
    case Family::kCnn: {
      auto h = nn::conv3x3(tape, x, var("conv1.weight"), var("conv1.bias"));
      h = nn::batchnorm2d(tape, h, var("bn.weight"), var("bn.bias"), bn.at(0));
      h = nn::dropout2d(tape, nn::relu(tape, h), drop);
      return nn::conv3x3(tape, h, var("conv2.weight"), var("conv2.bias"));
    }
    case Family::kTransformer: {
      if (H != arch_.grid_h || W != arch_.grid_w) {
        throw Error(ErrorCode::kShapeMismatch, "transformer was built for a " +
                                                   std::to_string(arch_.grid_h) + "x" +
                                                   std::to_string(arch_.grid_w) + " grid");
      }
      auto tokens = nn::to_tokens(tape, x);
      auto h = nn::dense(tape, tokens, var("in_proj.weight"), var("in_proj.bias"));
      h = nn::add_positional(tape, h, var("pos_embedding"));
      for (std::size_t l = 0; l < arch_.layers; ++l) h = encoder_layer(tape, h, l);
      auto y = nn::dense(tape, h, var("out_proj.weight"), var("out_proj.bias"));
      return nn::from_tokens(tape, y, H, W);
    }
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown family");
}

template <typename T>
Var<T> MappingNet<T>::forward(nn::Tape<T>& tape, const Var<T>& x) {
  return run(tape, x, bn_);
}

template <typename T>
BasicTensor<T> MappingNet<T>::predict(const BasicTensor<T>& x, nn::Mode mode,
                                      std::uint64_t seed) const {
  nn::Tape<T> tape(mode, seed, 0, false);
  auto bn = bn_;
  return run(tape, tape.constant(x), bn)->value;
}

template <typename T>
template <typename U>
MappingNet<U> MappingNet<T>::cast() const {
  MappingNet<U> out(arch_, false);
  for (const auto& p : params_) out.add(p.name, p.value().template cast<U>());
  for (const auto& s : bn_) {
    nn::BatchNormState<U> state(s.running_mean.size());
    state.running_mean = s.running_mean.template cast<U>();
    state.running_var = s.running_var.template cast<U>();
    state.momentum = s.momentum;
    state.eps = s.eps;
    out.bn_.push_back(std::move(state));
  }
  return out;
}

template class MappingNet<float>;
template class MappingNet<double>;
template MappingNet<double> MappingNet<float>::cast<double>() const;
template MappingNet<float> MappingNet<double>::cast<float>() const;
template MappingNet<float> MappingNet<float>::cast<float>() const;

}  // namespace featprobe::mapping
