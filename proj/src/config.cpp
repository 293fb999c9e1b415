#include "movdet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <type_traits>

namespace movdet {

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  int line_no = 0;
  std::size_t pos = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    out.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("invalid integer for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

namespace {

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Entry make_entry(ConfigKey key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<RunConfig&>()))>;
  Entry e;
  e.key = key;
  e.set = [access, name = key.name](RunConfig& c, std::string_view v) {
    if constexpr (std::is_floating_point_v<T>) {
      access(c) = parse_double(v, name);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      std::uint64_t out = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("invalid unsigned integer for " + std::string(name) + ": '" + std::string(v) + "'");
      }
      access(c) = out;
    } else {
      const long long x = parse_integer(v, name);
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) {
        throw ConfigError("value out of range for " + std::string(name));
      }
      access(c) = static_cast<T>(x);
    }
  };
  e.get = [access](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(access(c));
    } else {
      return std::to_string(access(c));
    }
  };
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    auto add = [&](ConfigKey k, auto access) { t.push_back(make_entry(k, access)); };
    add({"grid_step", "spacing of tracked grid points, px", ""}, [](auto& c) -> auto& { return c.pipeline.grid_step; });
    add({"lk_window", "Lucas-Kanade window side, px", ""}, [](auto& c) -> auto& { return c.pipeline.tracker.window; });
    add({"lk_levels", "Lucas-Kanade pyramid levels incl. base", ""}, [](auto& c) -> auto& { return c.pipeline.tracker.levels; });
    add({"lk_iterations", "Lucas-Kanade iterations per level", ""}, [](auto& c) -> auto& { return c.pipeline.tracker.max_iterations; });
    add({"lk_epsilon", "Lucas-Kanade convergence, px", ""}, [](auto& c) -> auto& { return c.pipeline.tracker.epsilon; });
    add({"lk_min_eigen", "minimum normalized eigenvalue for a trackable point", ""}, [](auto& c) -> auto& { return c.pipeline.tracker.min_eigen; });
    add({"ransac_threshold", "inlier reprojection threshold, px", ""}, [](auto& c) -> auto& { return c.pipeline.ransac.reproj_threshold; });
    add({"ransac_iterations", "maximum RANSAC iterations", ""}, [](auto& c) -> auto& { return c.pipeline.ransac.max_iterations; });
    add({"ransac_confidence", "early-stop confidence (1 disables early stop)", ""}, [](auto& c) -> auto& { return c.pipeline.ransac.confidence; });
    add({"seed", "RANSAC seed; frame index is added per frame", ""}, [](auto& c) -> auto& { return c.pipeline.ransac.seed; });
    add({"flow_pyr_scale", "dense flow pyramid scale", ""}, [](auto& c) -> auto& { return c.pipeline.flow.pyr_scale; });
    add({"flow_levels", "dense flow pyramid levels", ""}, [](auto& c) -> auto& { return c.pipeline.flow.levels; });
    add({"flow_window", "dense flow averaging window, px", ""}, [](auto& c) -> auto& { return c.pipeline.flow.window; });
    add({"flow_iterations", "dense flow iterations per level", ""}, [](auto& c) -> auto& { return c.pipeline.flow.iterations; });
    add({"flow_poly_n", "polynomial expansion half-width, px", ""}, [](auto& c) -> auto& { return c.pipeline.flow.poly_n; });
    add({"flow_poly_sigma", "polynomial expansion Gaussian sigma", ""}, [](auto& c) -> auto& { return c.pipeline.flow.poly_sigma; });
    add({"t_base", "base foreground threshold T", "T = 40"}, [](auto& c) -> auto& { return c.pipeline.foreground.t_base; });
    add({"lambda1", "adaptive threshold scale", "lambda1 = 0.005"}, [](auto& c) -> auto& { return c.pipeline.foreground.lambda1; });
    add({"lambda2", "adaptive threshold motion gain", "lambda2 = 0.25"}, [](auto& c) -> auto& { return c.pipeline.foreground.lambda2; });
    add({"t_age", "minimum age for foreground pixels, frames", "T_age = 5"}, [](auto& c) -> auto& { return c.pipeline.foreground.t_age; });
    add({"age_max", "age cap (minimum learning rate 1/age_max)", "age_max = 30"}, [](auto& c) -> auto& { return c.pipeline.age_max; });
    add({"t_mag", "flow magnitude above which weights apply, px/frame", "T_mag = 5"}, [](auto& c) -> auto& { return c.pipeline.foreground.t_mag; });
    add({"w_cap", "maximum flow weight", ""}, [](auto& c) -> auto& { return c.pipeline.foreground.w_cap; });
    add({"morph_radius", "opening radius (kernel side 2r+1)", ""}, [](auto& c) -> auto& { return c.pipeline.detection.morph_radius; });
    add({"min_area", "components must have more pixels than this", "area > 5 px"}, [](auto& c) -> auto& { return c.pipeline.detection.min_area; });
    add({"margin", "box enlargement on every side, px", ""}, [](auto& c) -> auto& { return c.pipeline.detection.margin; });
    add({"tau", "minimum overlap ratio for a true positive", "tau = 0.2"}, [](auto& c) -> auto& { return c.tau; });
    add({"warmup", "leading frames skipped by evaluation", ""}, [](auto& c) -> auto& { return c.warmup; });
    return t;
  }();
  return table;
}

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

bool RunConfig::operator==(const RunConfig& other) const {
  for (const auto& e : entries()) {
    if (e.get(*this) != e.get(other)) return false;
  }
  return true;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  find_entry(key).set(config, value);
}

std::string get_config_value(const RunConfig& config, std::string_view key) { return find_entry(key).get(config); }

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  for (const auto& kv : parse_key_values(text)) {
    try {
      set_config_value(config, kv.key, kv.value);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), kv.line);
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& e : entries()) {
    out += std::string(e.key.name) + " = " + e.get(config) + '\n';
  }
  return out;
}

}  // namespace movdet
