#include "crgan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "crgan/errors.hpp"

namespace crgan {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for key '" + std::string(key) + "'");
}

std::vector<std::size_t> parse_widths(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  text = trim(text);
  if (text.empty() || text == "none") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(parse_number<std::size_t>(key, part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_widths(const std::vector<std::size_t>& w) {
  return w.empty() ? "none" : fmt::format("{}", fmt::join(w, ","));
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"task",
       [](RunConfig& c, auto k, auto v) {
         if (v == "gmm8") c.task = Task::gmm8;
         else if (v == "gmm8_conditional") c.task = Task::gmm8_conditional;
         else throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(k) + "'");
       }},
      {"n_heads", [](RunConfig& c, auto k, auto v) { c.n_heads = parse_number<std::size_t>(k, v); }},
      {"head",
       [](RunConfig& c, auto k, auto v) {
         if (v == "cascade") c.head = HeadKind::cascade;
         else if (v == "dense") c.head = HeadKind::dense;
         else throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(k) + "'");
       }},
      {"loss_form",
       [](RunConfig& c, auto k, auto v) {
         const auto form = parse_loss_form(v);
         if (!form) throw ConfigError("invalid value '" + std::string(v) + "' for key '" + std::string(k) + "'");
         c.loss_form = *form;
       }},
      {"g_widths", [](RunConfig& c, auto k, auto v) { c.g_widths = parse_widths(k, v); }},
      {"d_widths", [](RunConfig& c, auto k, auto v) { c.d_widths = parse_widths(k, v); }},
      {"latent_dim", [](RunConfig& c, auto k, auto v) { c.latent_dim = parse_number<std::size_t>(k, v); }},
      {"class_embed_dim", [](RunConfig& c, auto k, auto v) { c.class_embed_dim = parse_number<std::size_t>(k, v); }},
      {"batch_size", [](RunConfig& c, auto k, auto v) { c.batch_size = parse_number<std::size_t>(k, v); }},
      {"total_g_updates", [](RunConfig& c, auto k, auto v) { c.total_g_updates = parse_number<std::int64_t>(k, v); }},
      {"d_steps_per_g", [](RunConfig& c, auto k, auto v) { c.d_steps_per_g = parse_number<int>(k, v); }},
      {"lr", [](RunConfig& c, auto k, auto v) { c.lr = parse_number<double>(k, v); }},
      {"beta1", [](RunConfig& c, auto k, auto v) { c.beta1 = parse_number<double>(k, v); }},
      {"beta2", [](RunConfig& c, auto k, auto v) { c.beta2 = parse_number<double>(k, v); }},
      {"adam_eps", [](RunConfig& c, auto k, auto v) { c.adam_eps = parse_number<double>(k, v); }},
      {"spectral_norm", [](RunConfig& c, auto k, auto v) { c.spectral_norm = parse_bool(k, v); }},
      {"leaky_alpha", [](RunConfig& c, auto k, auto v) { c.leaky_alpha = parse_number<double>(k, v); }},
      {"gmm_radius", [](RunConfig& c, auto k, auto v) { c.gmm_radius = parse_number<double>(k, v); }},
      {"gmm_sigma", [](RunConfig& c, auto k, auto v) { c.gmm_sigma = parse_number<double>(k, v); }},
      {"eval_every", [](RunConfig& c, auto k, auto v) { c.eval_every = parse_number<std::int64_t>(k, v); }},
      {"eval_samples", [](RunConfig& c, auto k, auto v) { c.eval_samples = parse_number<std::size_t>(k, v); }},
      {"snapshot_samples",
       [](RunConfig& c, auto k, auto v) { c.snapshot_samples = parse_number<std::size_t>(k, v); }},
      {"snapshot_svg", [](RunConfig& c, auto k, auto v) { c.snapshot_svg = parse_bool(k, v); }},
      {"out_dir", [](RunConfig& c, auto, auto v) { c.out_dir = std::string(v); }},
  };
  return table;
}

}  // namespace

std::string_view to_string(Task t) { return t == Task::gmm8 ? "gmm8" : "gmm8_conditional"; }
std::string_view to_string(HeadKind h) { return h == HeadKind::cascade ? "cascade" : "dense"; }

void RunConfig::validate() const {
  if (n_heads < 1) throw ConfigError("n_heads must be >= 1");
  if (head == HeadKind::dense && n_heads != 1) throw ConfigError("head=dense requires n_heads=1");
  if (head == HeadKind::dense && conditional()) throw ConfigError("head=dense is not available for the conditional task");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (conditional() && class_embed_dim < 1) throw ConfigError("class_embed_dim must be >= 1");
  if (total_g_updates < 0) throw ConfigError("total_g_updates must be >= 0");
  if (d_steps_per_g < 0) throw ConfigError("d_steps_per_g must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be > 0");
  if (!(gmm_radius > 0.0)) throw ConfigError("gmm_radius must be > 0");
  if (!(gmm_sigma > 0.0)) throw ConfigError("gmm_sigma must be > 0");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_samples < 3) throw ConfigError("eval_samples must be >= 3");
  for (auto w : g_widths)
    if (w == 0) throw ConfigError("g_widths entries must be >= 1");
  for (auto w : d_widths)
    if (w == 0) throw ConfigError("d_widths entries must be >= 1");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
  return {
      {"seed", fmt::format("{}", c.seed)},
      {"task", std::string(to_string(c.task))},
      {"n_heads", fmt::format("{}", c.n_heads)},
      {"head", std::string(to_string(c.head))},
      {"loss_form", std::string(to_string(c.loss_form))},
      {"g_widths", format_widths(c.g_widths)},
      {"d_widths", format_widths(c.d_widths)},
      {"latent_dim", fmt::format("{}", c.latent_dim)},
      {"class_embed_dim", fmt::format("{}", c.class_embed_dim)},
      {"batch_size", fmt::format("{}", c.batch_size)},
      {"total_g_updates", fmt::format("{}", c.total_g_updates)},
      {"d_steps_per_g", fmt::format("{}", c.d_steps_per_g)},
      {"lr", fmt::format("{}", c.lr)},
      {"beta1", fmt::format("{}", c.beta1)},
      {"beta2", fmt::format("{}", c.beta2)},
      {"adam_eps", fmt::format("{}", c.adam_eps)},
      {"spectral_norm", c.spectral_norm ? "true" : "false"},
      {"leaky_alpha", fmt::format("{}", c.leaky_alpha)},
      {"gmm_radius", fmt::format("{}", c.gmm_radius)},
      {"gmm_sigma", fmt::format("{}", c.gmm_sigma)},
      {"eval_every", fmt::format("{}", c.eval_every)},
      {"eval_samples", fmt::format("{}", c.eval_samples)},
      {"snapshot_samples", fmt::format("{}", c.snapshot_samples)},
      {"snapshot_svg", c.snapshot_svg ? "true" : "false"},
      {"out_dir", c.out_dir},
  };
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_entries(cfg)) out += k + "=" + v + "\n";
  return out;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, trim(value));
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + std::string(t) + "'");
    }
    set_config_value(base, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace crgan
