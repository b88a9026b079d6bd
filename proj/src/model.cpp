#include "crgan/model.hpp"

#include "crgan/errors.hpp"

namespace crgan {
namespace {

void append_layer_state(NamedTensors& out, DenseLayer& layer) {
  out.emplace_back(layer.weight().name, &layer.weight().value);
  if (layer.has_bias()) out.emplace_back(layer.bias().name, &layer.bias().value);
  out.emplace_back(layer.weight().name.substr(0, layer.weight().name.rfind('.')) + ".sn_u", &layer.sn_u());
}

std::variant<CRHead, CCRHead, DenseLayer> make_head(const RunConfig& cfg, Rng& init) {
  const std::size_t c_l = cfg.feature_dim();
  if (cfg.head == HeadKind::dense) return DenseLayer("head", c_l, 1, cfg.spectral_norm, init, /*bias=*/false);
  if (cfg.conditional()) return CCRHead(cfg.n_heads, c_l, kNumClasses, cfg.spectral_norm, init);
  return CRHead(cfg.n_heads, c_l, cfg.spectral_norm, init);
}

}  // namespace

// ---------------------------------------------------------------------------
// Generator

Generator::Generator(const RunConfig& cfg, Rng& init) : latent_dim_(cfg.latent_dim) {
  std::vector<LayerSpec> specs;
  for (auto w : cfg.g_widths) specs.push_back({w, Activation::relu()});
  specs.push_back({2, Activation::none()});
  const std::size_t in = cfg.latent_dim + (cfg.conditional() ? cfg.class_embed_dim : 0);
  net_ = Mlp("g", in, specs, /*spectral_norm=*/false, init);
  if (cfg.conditional()) embedding_.emplace("g.embed", kNumClasses, cfg.class_embed_dim, init);
}

Var Generator::forward(Graph& g, const Tensor& z, std::span<const int> labels, bool training) {
  if (z.cols() != latent_dim_) {
    throw DimensionError("generator: latent " + to_string(z.shape()) + " does not match latent_dim " +
                         std::to_string(latent_dim_));
  }
  Var input = g.constant(z);
  if (embedding_) {
    if (labels.size() != z.rows()) throw DimensionError("generator: one label per latent row required");
    const Var parts[] = {input, embedding_->lookup(g, labels)};
    input = concat_cols(parts);
  } else if (!labels.empty()) {
    throw ContractError("generator: labels given to an unconditional generator");
  }
  return net_.forward(g, input, training);
}

SampleBatch Generator::sample(std::size_t n, Rng& rng) {
  const Tensor z = sample_latent(LatentSpec{latent_dim_}, n, rng);
  std::vector<int> labels;
  if (embedding_) labels = sample_labels(embedding_->num_classes(), n, rng);
  if (n == 0) return {Tensor(0, 2), labels};
  Graph g;
  Tensor points = forward(g, z, labels, false).value();
  return {std::move(points), std::move(labels)};
}

ParameterList Generator::parameters() {
  ParameterList out = net_.parameters();
  if (embedding_) out.push_back(&embedding_->table());
  return out;
}

NamedTensors Generator::state_tensors() {
  NamedTensors out;
  for (auto& layer : net_.layers()) append_layer_state(out, layer);
  if (embedding_) out.emplace_back(embedding_->table().name, &embedding_->table().value);
  return out;
}

// ---------------------------------------------------------------------------
// Discriminator

Discriminator::Discriminator(const RunConfig& cfg, Rng& init) {
  std::vector<LayerSpec> specs;
  for (auto w : cfg.d_widths) specs.push_back({w, Activation::leaky(cfg.leaky_alpha)});
  trunk_ = Mlp("d", 2, specs, cfg.spectral_norm, init);
  head_ = make_head(cfg, init);
}

Var Discriminator::forward(Graph& g, Var x, std::span<const int> labels, bool training) {
  Var v1 = trunk_.forward(g, x, training);
  return std::visit(
      [&](auto& head) -> Var {
        using H = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<H, CCRHead>) {
          return head.forward(g, v1, labels, training);
        } else {
          if (!labels.empty()) throw ContractError("discriminator: labels given to an unconditional head");
          return head.forward(g, v1, training);
        }
      },
      head_);
}

std::size_t Discriminator::num_scores() const {
  return std::visit(
      [](const auto& head) -> std::size_t {
        using H = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<H, DenseLayer>) {
          return head.out_dim();
        } else {
          return head.num_scores();
        }
      },
      head_);
}

std::size_t Discriminator::head_param_count() const {
  return std::visit(
      [](const auto& head) -> std::size_t {
        using H = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<H, DenseLayer>) {
          return head.weight().value.size() + (head.has_bias() ? head.bias().value.size() : 0);
        } else {
          return head.param_count();
        }
      },
      head_);
}

ParameterList Discriminator::parameters() {
  ParameterList out = trunk_.parameters();
  std::visit(
      [&](auto& head) {
        auto p = head.parameters();
        out.insert(out.end(), p.begin(), p.end());
      },
      head_);
  return out;
}

NamedTensors Discriminator::state_tensors() {
  NamedTensors out;
  for (auto& layer : trunk_.layers()) append_layer_state(out, layer);
  std::visit(
      [&](auto& head) {
        using H = std::decay_t<decltype(head)>;
        if constexpr (std::is_same_v<H, DenseLayer>) {
          append_layer_state(out, head);
        } else {
          CRHead* base = nullptr;
          if constexpr (std::is_same_v<H, CCRHead>) {
            base = &head.base();
            for (auto& e : head.embeddings()) out.emplace_back(e.table().name, &e.table().value);
          } else {
            base = &head;
          }
          out.emplace_back(base->weights().name, &base->weights().value);
          for (std::size_t i = 0; i < base->sn_u().size(); ++i) {
            out.emplace_back("head.sn_u." + std::to_string(i), &base->sn_u()[i]);
          }
        }
      },
      head_);
  return out;
}

}  // namespace crgan
