#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crgan/losses.hpp"

namespace crgan {

enum class Task { gmm8, gmm8_conditional };

/// Discriminator output layer. `dense` is the plain single-score layer and only
/// accepts n_heads = 1; it exists as the reference path for the cascade.
enum class HeadKind { cascade, dense };

struct RunConfig {
  std::uint64_t seed = 0;
  Task task = Task::gmm8;
  std::size_t n_heads = 8;
  HeadKind head = HeadKind::cascade;
  LossForm loss_form = LossForm::hinge;
  std::vector<std::size_t> g_widths{128, 128, 128};
  std::vector<std::size_t> d_widths{128, 128};
  std::size_t latent_dim = 2;
  std::size_t class_embed_dim = 8;
  std::size_t batch_size = 64;
  std::int64_t total_g_updates = 4000;
  int d_steps_per_g = 5;
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double adam_eps = 1e-8;
  bool spectral_norm = true;
  double leaky_alpha = 0.1;
  double gmm_radius = 2.0;
  double gmm_sigma = 0.05;
  std::int64_t eval_every = 200;
  std::size_t eval_samples = 8000;
  std::size_t snapshot_samples = 2000;
  bool snapshot_svg = true;
  std::string out_dir = "runs/default";

  [[nodiscard]] bool conditional() const { return task == Task::gmm8_conditional; }
  [[nodiscard]] std::size_t feature_dim() const { return d_widths.empty() ? 2 : d_widths.back(); }

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

std::string_view to_string(Task t);
std::string_view to_string(HeadKind h);

/// Every field as (key, value) in declaration order, values formatted so that
/// parsing them back reproduces the config exactly.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);
/// `key=value` lines.
std::string format_config(const RunConfig& cfg);

/// Sets one field from its textual value; unknown keys and malformed values throw ConfigError.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat UTF-8 `key=value` text. Blank lines and lines starting with '#' are ignored.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace crgan
