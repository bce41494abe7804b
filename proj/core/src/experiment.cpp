#include "mwrn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mwrn/baselines.hpp"
#include "mwrn/channel.hpp"
#include "mwrn/linksim.hpp"
#include "mwrn/metrics.hpp"

namespace mwrn {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SumRateSweep: return "sumrate";
    case ExperimentKind::SerSweep: return "ser";
    case ExperimentKind::UserCountSweep: return "sweep-users";
    case ExperimentKind::SchedulingCompare: return "schedule-compare";
    case ExperimentKind::ReducedAntennaCompare: return "reduced-compare";
  }
  return "?";
}

std::string to_string(Design design) {
  switch (design) {
    case Design::Zf: return "zf";
    case Design::Mmse: return "mmse";
    case Design::Rzf: return "rzf";
    case Design::Mf: return "mf";
    case Design::PzfJoint: return "pzf-joint";
    case Design::PzfSeparate: return "pzf-separate";
    case Design::PzfReduced: return "pzf-reduced";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void fail_at(int line, const std::string& field,
                          const std::string& message) {
  std::ostringstream os;
  os << "config line " << line << ", field '" << field << "': " << message;
  throw std::invalid_argument(os.str());
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& v, int line, const std::string& field) {
  try {
    std::size_t idx = 0;
    const double d = std::stod(v, &idx);
    if (idx != v.size()) fail_at(line, field, "trailing characters in number");
    return d;
  } catch (const std::invalid_argument&) {
    fail_at(line, field, "not a number: '" + v + "'");
  } catch (const std::out_of_range&) {
    fail_at(line, field, "number out of range: '" + v + "'");
  }
}

long parse_long(const std::string& v, int line, const std::string& field) {
  try {
    std::size_t idx = 0;
    const long d = std::stol(v, &idx);
    if (idx != v.size()) fail_at(line, field, "trailing characters in integer");
    return d;
  } catch (const std::invalid_argument&) {
    fail_at(line, field, "not an integer: '" + v + "'");
  } catch (const std::out_of_range&) {
    fail_at(line, field, "integer out of range: '" + v + "'");
  }
}

std::vector<double> parse_double_list(const std::string& v, int line,
                                      const std::string& field) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) {
    if (part.empty()) fail_at(line, field, "empty list element");
    out.push_back(parse_double(part, line, field));
  }
  if (out.empty()) fail_at(line, field, "empty list");
  return out;
}

/// "a:b:step" ranges or comma lists.
std::vector<double> parse_grid(const std::string& v, int line,
                               const std::string& field) {
  if (v.find(':') != std::string::npos) {
    const auto parts = split(v, ':');
    if (parts.size() != 3) fail_at(line, field, "range must be start:stop:step");
    const double start = parse_double(parts[0], line, field);
    const double stop = parse_double(parts[1], line, field);
    const double step = parse_double(parts[2], line, field);
    if (!(step > 0.0)) fail_at(line, field, "range step must be > 0");
    std::vector<double> out;
    for (double x = start; x <= stop + 1e-9; x += step) out.push_back(x);
    if (out.empty()) fail_at(line, field, "empty range");
    return out;
  }
  return parse_double_list(v, line, field);
}

Strategy parse_strategy(const std::string& v, int line, const std::string& field) {
  if (v == "unicast") return Strategy::unicast();
  if (v.rfind("hybrid:", 0) == 0) {
    const auto parts = split(v, ':');
    if (parts.size() != 3) {
      fail_at(line, field, "hybrid strategy must be hybrid:<source>:<m1>,<m2>,...");
    }
    const int source = static_cast<int>(parse_long(parts[1], line, field));
    std::vector<int> order;
    for (const auto& p : split(parts[2], ',')) {
      if (p.empty()) fail_at(line, field, "empty multicast order element");
      order.push_back(static_cast<int>(parse_long(p, line, field)));
    }
    return Strategy::hybrid(source, order);
  }
  fail_at(line, field, "unknown strategy '" + v + "'");
}

Design parse_design(const std::string& v, int line, const std::string& field) {
  for (Design d : {Design::Zf, Design::Mmse, Design::Rzf, Design::Mf,
                   Design::PzfJoint, Design::PzfSeparate, Design::PzfReduced}) {
    if (to_string(d) == v) return d;
  }
  fail_at(line, field, "unknown design '" + v + "'");
}

ExperimentKind parse_kind(const std::string& v, int line, const std::string& field) {
  for (ExperimentKind k :
       {ExperimentKind::SumRateSweep, ExperimentKind::SerSweep,
        ExperimentKind::UserCountSweep, ExperimentKind::SchedulingCompare,
        ExperimentKind::ReducedAntennaCompare}) {
    if (to_string(k) == v) return k;
  }
  fail_at(line, field, "unknown experiment kind '" + v + "'");
}

// ------------------------------------------------------------ CSV helpers

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += "\"";
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Stats {
  double mean = 0.0;
  double stderr_ = 0.0;
  long count = 0;
};

Stats summarize(const std::vector<double>& values) {
  Stats s;
  s.count = static_cast<long>(values.size());
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_ = std::sqrt(ss / (static_cast<double>(s.count) * (s.count - 1)));
  }
  return s;
}

void for_each_trial(long trials, int threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || trials < 2 * threads) {
    for (long t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (trials + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long begin = w * chunk;
    const long end = std::min(trials, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      for (long t = begin; t < end; ++t) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

// ------------------------------------------------------------- spec logic

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (snr_grid_db.empty()) throw std::invalid_argument("snr grid must be non-empty");
  if (qam_order < 4) throw std::invalid_argument("qam order must be >= 4");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!(rzf_alpha > 0.0)) throw std::invalid_argument("rzf alpha must be > 0");
  if (!(fd_step > 0.0) || !(improvement_tol > 0.0) || max_iterations < 1 ||
      !(step_joint > 0.0) || !(step_separate > 0.0)) {
    throw std::invalid_argument("optimizer parameters must be positive");
  }

  const auto check_design_fit = [&](Design d, int n, int m) {
    if (d == Design::PzfReduced) {
      if (m != n - 1) {
        throw std::invalid_argument("pzf-reduced requires m_antennas = n_users - 1");
      }
    } else if (m < n) {
      throw std::invalid_argument(to_string(d) + " requires m_antennas >= n_users");
    }
  };

  switch (kind) {
    case ExperimentKind::UserCountSweep: {
      if (user_counts.empty()) {
        throw std::invalid_argument("sweep-users needs user_counts");
      }
      if (user_powers.size() > 1) {
        throw std::invalid_argument(
            "sweep-users needs a single broadcastable user_power");
      }
      if (snr_grid_db.size() != 1) {
        throw std::invalid_argument("sweep-users expects exactly one SNR point");
      }
      if (heterogeneous) {
        throw std::invalid_argument("sweep-users supports homogeneous channels only");
      }
      if (designs.empty()) throw std::invalid_argument("design list must be non-empty");
      for (int n : user_counts) {
        if (n < 2) throw std::invalid_argument("user counts must be >= 2");
        for (Design d : designs) check_design_fit(d, n, m_antennas);
      }
      break;
    }
    case ExperimentKind::ReducedAntennaCompare: {
      if (network_sizes.empty()) {
        throw std::invalid_argument("reduced-compare needs networks (N:M list)");
      }
      if (!designs.empty()) {
        throw std::invalid_argument(
            "reduced-compare chooses designs automatically; remove 'designs'");
      }
      if (user_powers.size() > 1) {
        throw std::invalid_argument(
            "reduced-compare needs a single broadcastable user_power");
      }
      for (auto [n, m] : network_sizes) {
        if (n < 2 || m < n - 1 || m > n) {
          throw std::invalid_argument(
              "reduced-compare networks need M = N or M = N-1");
        }
      }
      break;
    }
    case ExperimentKind::SchedulingCompare: {
      if (compare_strategies.empty()) {
        throw std::invalid_argument("schedule-compare needs compare_strategies");
      }
      if (designs.empty()) throw std::invalid_argument("design list must be non-empty");
      for (const auto& s : compare_strategies) network(s);  // validates
      for (Design d : designs) check_design_fit(d, n_users, m_antennas);
      break;
    }
    default: {
      if (designs.empty()) throw std::invalid_argument("design list must be non-empty");
      for (Design d : designs) check_design_fit(d, n_users, m_antennas);
      break;
    }
  }
  network();  // throws if the base network parameters are inconsistent
}

NetworkConfig ExperimentSpec::network(int n_override, int m_override) const {
  return network(strategy, n_override, m_override);
}

NetworkConfig ExperimentSpec::network(const Strategy& strat, int n_override,
                                      int m_override) const {
  const int n = n_override > 0 ? n_override : n_users;
  const int m = m_override > 0 ? m_override : m_antennas;
  std::vector<double> powers = user_powers;
  if (powers.empty()) powers.assign(n, 1.0);
  if (powers.size() == 1) powers.assign(n, powers[0]);
  ChannelModel model =
      heterogeneous
          ? ChannelModel::heterogeneous(distances, distances.at(0), path_exponent)
          : ChannelModel::homogeneous(1.0);
  return NetworkConfig(n, m, std::move(powers), relay_power, std::move(model),
                       strat, decoding_order);
}

OptimizerConfig ExperimentSpec::optimizer(Design design) const {
  OptimizerConfig opt;
  opt.step_size = design == Design::PzfJoint ? step_joint : step_separate;
  opt.fd_step = fd_step;
  opt.improvement_tol = improvement_tol;
  opt.max_iterations = max_iterations;
  return opt;
}

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  spec.designs.clear();
  spec.snr_grid_db.clear();

  bool saw_user_power = false, saw_user_powers = false;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail_at(line_no, line, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(line_no, "?", "missing key before '='");
    if (value.empty()) fail_at(line_no, key, "missing value");

    if (key == "experiment") {
      spec.kind = parse_kind(value, line_no, key);
    } else if (key == "n_users") {
      spec.n_users = static_cast<int>(parse_long(value, line_no, key));
    } else if (key == "m_antennas") {
      spec.m_antennas = static_cast<int>(parse_long(value, line_no, key));
    } else if (key == "user_power") {
      if (saw_user_powers) fail_at(line_no, key, "user_power conflicts with user_powers");
      saw_user_power = true;
      spec.user_powers = {parse_double(value, line_no, key)};
    } else if (key == "user_powers") {
      if (saw_user_power) fail_at(line_no, key, "user_powers conflicts with user_power");
      saw_user_powers = true;
      spec.user_powers = parse_double_list(value, line_no, key);
    } else if (key == "relay_power") {
      spec.relay_power = parse_double(value, line_no, key);
    } else if (key == "channel") {
      if (value == "homogeneous") {
        spec.heterogeneous = false;
      } else if (value == "heterogeneous") {
        spec.heterogeneous = true;
      } else {
        fail_at(line_no, key, "expected homogeneous or heterogeneous");
      }
    } else if (key == "distances") {
      spec.distances = parse_double_list(value, line_no, key);
    } else if (key == "path_exponent") {
      spec.path_exponent = parse_double(value, line_no, key);
    } else if (key == "strategy") {
      spec.strategy = parse_strategy(value, line_no, key);
    } else if (key == "compare_strategies") {
      spec.compare_strategies.clear();
      for (const auto& part : split(value, ';')) {
        if (part.empty()) fail_at(line_no, key, "empty strategy element");
        spec.compare_strategies.push_back(parse_strategy(part, line_no, key));
      }
    } else if (key == "decoding_order") {
      if (value == "clockwise") {
        spec.decoding_order = DecodingOrder::Clockwise;
      } else if (value == "counterclockwise") {
        spec.decoding_order = DecodingOrder::CounterClockwise;
      } else {
        fail_at(line_no, key, "expected clockwise or counterclockwise");
      }
    } else if (key == "designs") {
      spec.designs.clear();
      for (const auto& part : split(value, ',')) {
        if (part.empty()) fail_at(line_no, key, "empty design element");
        spec.designs.push_back(parse_design(part, line_no, key));
      }
    } else if (key == "snr_db") {
      spec.snr_grid_db = parse_grid(value, line_no, key);
    } else if (key == "user_counts") {
      spec.user_counts.clear();
      for (double v : parse_grid(value, line_no, key)) {
        spec.user_counts.push_back(static_cast<int>(v));
      }
    } else if (key == "networks") {
      spec.network_sizes.clear();
      for (const auto& part : split(value, ',')) {
        const auto nm = split(part, ':');
        if (nm.size() != 2) fail_at(line_no, key, "network must be N:M");
        spec.network_sizes.emplace_back(
            static_cast<int>(parse_long(nm[0], line_no, key)),
            static_cast<int>(parse_long(nm[1], line_no, key)));
      }
    } else if (key == "trials") {
      spec.trials = parse_long(value, line_no, key);
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_long(value, line_no, key));
    } else if (key == "qam_order") {
      spec.qam_order = static_cast<int>(parse_long(value, line_no, key));
    } else if (key == "rzf_alpha") {
      spec.rzf_alpha = parse_double(value, line_no, key);
    } else if (key == "threads") {
      spec.threads = static_cast<int>(parse_long(value, line_no, key));
    } else if (key == "step_joint") {
      spec.step_joint = parse_double(value, line_no, key);
    } else if (key == "step_separate") {
      spec.step_separate = parse_double(value, line_no, key);
    } else if (key == "fd_step") {
      spec.fd_step = parse_double(value, line_no, key);
    } else if (key == "improvement_tol") {
      spec.improvement_tol = parse_double(value, line_no, key);
    } else if (key == "max_iterations") {
      spec.max_iterations = static_cast<int>(parse_long(value, line_no, key));
    } else if (key == "out") {
      spec.out_path = value;
    } else if (key == "trace_out") {
      spec.trace_out = value;
    } else {
      fail_at(line_no, key, "unknown key");
    }
  }

  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config invalid: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------- presets

std::vector<std::string> preset_names() {
  return {"fig4", "fig5", "fig6", "fig9", "fig10", "fig12"};
}

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.designs.clear();
  const std::vector<double> snr_coarse = {0, 5, 10, 15, 20, 25, 30};
  if (name == "fig4") {
    // Homogeneous 3-user sum-rate comparison, P_R = P_i = 1.
    s.kind = ExperimentKind::SumRateSweep;
    s.n_users = 3;
    s.m_antennas = 3;
    s.designs = {Design::Zf, Design::Mmse, Design::Mf, Design::PzfJoint,
                 Design::PzfSeparate};
    s.snr_grid_db = snr_coarse;
    s.trials = 500;
    s.seed = 1004;
  } else if (name == "fig5") {
    // Users swept 3..8 with an 8-antenna relay at SNR 20 dB.
    s.kind = ExperimentKind::UserCountSweep;
    s.m_antennas = 8;
    s.user_counts = {3, 4, 5, 6, 7, 8};
    s.designs = {Design::Zf, Design::PzfSeparate};
    s.snr_grid_db = {20};
    s.trials = 200;
    s.seed = 1005;
  } else if (name == "fig6") {
    // Homogeneous 3-user SER comparison, 4-QAM.
    s.kind = ExperimentKind::SerSweep;
    s.n_users = 3;
    s.m_antennas = 3;
    s.designs = {Design::Zf, Design::Mmse, Design::Mf, Design::PzfSeparate};
    s.snr_grid_db = {0, 5, 10, 15, 20};
    s.trials = 100000;
    s.seed = 1006;
  } else if (name == "fig9") {
    // Unicast vs hybrid uni/multicast, homogeneous channels.
    s.kind = ExperimentKind::SchedulingCompare;
    s.n_users = 3;
    s.m_antennas = 3;
    s.compare_strategies = {Strategy::unicast(), Strategy::hybrid(1, {2, 3})};
    s.designs = {Design::Zf, Design::PzfSeparate};
    s.snr_grid_db = snr_coarse;
    s.trials = 300;
    s.seed = 1009;
  } else if (name == "fig10") {
    // Two hybrid detection schedules, heterogeneous d3 = 2 d2 = 2 d1.
    s.kind = ExperimentKind::SchedulingCompare;
    s.n_users = 3;
    s.m_antennas = 3;
    s.heterogeneous = true;
    s.distances = {1, 1, 2};
    s.compare_strategies = {Strategy::hybrid(1, {2, 3}), Strategy::hybrid(1, {3, 2})};
    s.designs = {Design::Zf, Design::PzfSeparate};
    s.snr_grid_db = snr_coarse;
    s.trials = 300;
    s.seed = 1010;
  } else if (name == "fig12") {
    // Antenna-reduction comparison across four network sizes.
    s.kind = ExperimentKind::ReducedAntennaCompare;
    s.network_sizes = {{4, 4}, {4, 3}, {3, 3}, {3, 2}};
    s.snr_grid_db = snr_coarse;
    s.trials = 300;
    s.seed = 1012;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  s.validate();
  return s;
}

// ------------------------------------------------- canonical text and hash

std::string canonical_config_text(const ExperimentSpec& spec) {
  std::ostringstream os;
  os << "# canonical configuration (" << kVersion << ")\n";
  os << "experiment = " << to_string(spec.kind) << "\n";
  if (spec.kind != ExperimentKind::ReducedAntennaCompare) {
    if (spec.kind != ExperimentKind::UserCountSweep) {
      os << "n_users = " << spec.n_users << "\n";
    }
    os << "m_antennas = " << spec.m_antennas << "\n";
  }
  os << "user_powers = ";
  const auto powers = spec.user_powers.empty()
                          ? std::vector<double>{1.0}
                          : spec.user_powers;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    os << (i ? "," : "") << fmt(powers[i]);
  }
  os << "\n";
  os << "relay_power = " << fmt(spec.relay_power) << "\n";
  os << "channel = " << (spec.heterogeneous ? "heterogeneous" : "homogeneous") << "\n";
  if (spec.heterogeneous) {
    os << "distances = ";
    for (std::size_t i = 0; i < spec.distances.size(); ++i) {
      os << (i ? "," : "") << fmt(spec.distances[i]);
    }
    os << "\n";
    os << "path_exponent = " << fmt(spec.path_exponent) << "\n";
  }
  if (spec.kind == ExperimentKind::SchedulingCompare) {
    os << "compare_strategies = ";
    for (std::size_t i = 0; i < spec.compare_strategies.size(); ++i) {
      os << (i ? " ; " : "") << spec.compare_strategies[i].label();
    }
    os << "\n";
  } else {
    os << "strategy = " << spec.strategy.label() << "\n";
  }
  os << "decoding_order = "
     << (spec.decoding_order == DecodingOrder::Clockwise ? "clockwise"
                                                         : "counterclockwise")
     << "\n";
  if (spec.kind != ExperimentKind::ReducedAntennaCompare) {
    os << "designs = ";
    for (std::size_t i = 0; i < spec.designs.size(); ++i) {
      os << (i ? "," : "") << to_string(spec.designs[i]);
    }
    os << "\n";
  }
  os << "snr_db = ";
  for (std::size_t i = 0; i < spec.snr_grid_db.size(); ++i) {
    os << (i ? "," : "") << fmt(spec.snr_grid_db[i]);
  }
  os << "\n";
  if (spec.kind == ExperimentKind::UserCountSweep) {
    os << "user_counts = ";
    for (std::size_t i = 0; i < spec.user_counts.size(); ++i) {
      os << (i ? "," : "") << spec.user_counts[i];
    }
    os << "\n";
  }
  if (spec.kind == ExperimentKind::ReducedAntennaCompare) {
    os << "networks = ";
    for (std::size_t i = 0; i < spec.network_sizes.size(); ++i) {
      os << (i ? "," : "") << spec.network_sizes[i].first << ":"
         << spec.network_sizes[i].second;
    }
    os << "\n";
  }
  os << "trials = " << spec.trials << "\n";
  os << "seed = " << spec.seed << "\n";
  if (spec.kind == ExperimentKind::SerSweep) {
    os << "qam_order = " << spec.qam_order << "\n";
  }
  os << "rzf_alpha = " << fmt(spec.rzf_alpha) << "\n";
  os << "step_joint = " << fmt(spec.step_joint) << "\n";
  os << "step_separate = " << fmt(spec.step_separate) << "\n";
  os << "fd_step = " << fmt(spec.fd_step) << "\n";
  os << "improvement_tol = " << fmt(spec.improvement_tol) << "\n";
  os << "max_iterations = " << spec.max_iterations << "\n";
  return os.str();
}

std::uint64_t config_hash(const ExperimentSpec& spec) {
  const std::string text = canonical_config_text(spec);
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ------------------------------------------------------------- experiment

namespace {

BeamformerSet build_design(Design design, const CMatrix& h,
                           const NetworkConfig& config, const ExperimentSpec& spec) {
  switch (design) {
    case Design::Zf: return zf_beamformer_set(h, config);
    case Design::Mmse: return mmse_beamformer_set(h, config);
    case Design::Rzf: return rzf_beamformer_set(h, config, spec.rzf_alpha);
    case Design::Mf: return mf_beamformer_set(h, config);
    case Design::PzfJoint:
      return optimize_joint(h, config, spec.optimizer(design)).beamformers;
    case Design::PzfSeparate:
      return optimize_separate(h, config, spec.optimizer(design)).beamformers;
    case Design::PzfReduced:
      return optimize_reduced(h, config, spec.optimizer(design)).beamformers;
  }
  throw std::logic_error("unreachable design");
}

struct Row {
  std::string experiment;
  std::string design;
  double snr_db;
  int n_users;
  int m_antennas;
  std::string metric;
  double mean;
  double stderr_;
  long trials;
  long failures;
};

void emit(std::ostringstream& os, const Row& row, std::uint64_t seed,
          const std::string& hash) {
  os << csv_quote(row.experiment) << "," << csv_quote(row.design) << ","
     << fmt(row.snr_db) << "," << row.n_users << "," << row.m_antennas << ","
     << csv_quote(row.metric) << "," << fmt(row.mean) << "," << fmt(row.stderr_)
     << "," << row.trials << "," << row.failures << "," << seed << "," << hash
     << "\n";
}

/// Mean sum-rate of one design over seeded channel draws. Streams are
/// shared per (point, trial) so different designs see the same channels.
Row sumrate_row(const ExperimentSpec& spec, const NetworkConfig& config,
                Design design, const std::string& label, double snr_db,
                std::uint64_t point_stream) {
  const double snr_linear = std::pow(10.0, snr_db / 10.0);
  const NetworkConfig point_config = config.with_channel_model(
      config.channel_model().with_reference_snr(snr_linear));

  std::vector<double> values(spec.trials);
  std::vector<char> failed(spec.trials, 0);
  for_each_trial(spec.trials, spec.threads, [&](long t) {
    Rng rng(Rng::derive_seed(spec.seed, (point_stream << 32) + t));
    const CMatrix h = generate_channel(point_config, rng);
    try {
      const BeamformerSet set = build_design(design, h, point_config, spec);
      values[t] = rate_report(h, set, point_config).sum_rate;
    } catch (const std::exception&) {
      failed[t] = 1;
    }
  });

  std::vector<double> ok;
  ok.reserve(spec.trials);
  long failures = 0;
  for (long t = 0; t < spec.trials; ++t) {
    if (failed[t]) {
      ++failures;
    } else {
      ok.push_back(values[t]);
    }
  }
  const Stats stats = summarize(ok);
  return {to_string(spec.kind), label,   snr_db,       config.n_users(),
          config.m_antennas(),  "sumrate", stats.mean, stats.stderr_,
          spec.trials,          failures};
}

double ser_stderr(const SerResult& r) {
  const long t = r.trials - r.failures;
  if (t < 2) return 0.0;
  const double mean = r.block_ser_sum / t;
  const double var = std::max(0.0, r.block_ser_sumsq / t - mean * mean);
  return std::sqrt(var / (t - 1));
}

}  // namespace

std::string run_experiment(const ExperimentSpec& spec) {
  const std::string hash = hash_hex(config_hash(spec));
  std::ostringstream csv;
  csv << "experiment,design,snr_db,n_users,m_antennas,metric_name,mean,stderr,"
         "trials,failures,seed,config_hash\n";

  switch (spec.kind) {
    case ExperimentKind::SumRateSweep: {
      const NetworkConfig base = spec.network();
      for (std::size_t p = 0; p < spec.snr_grid_db.size(); ++p) {
        for (Design d : spec.designs) {
          emit(csv,
               sumrate_row(spec, base, d, to_string(d), spec.snr_grid_db[p], p),
               spec.seed, hash);
        }
      }
      break;
    }
    case ExperimentKind::UserCountSweep: {
      const double snr = spec.snr_grid_db[0];
      for (std::size_t u = 0; u < spec.user_counts.size(); ++u) {
        const NetworkConfig base = spec.network(spec.user_counts[u]);
        for (Design d : spec.designs) {
          emit(csv, sumrate_row(spec, base, d, to_string(d), snr, 1000 + u),
               spec.seed, hash);
        }
      }
      break;
    }
    case ExperimentKind::SchedulingCompare: {
      for (std::size_t p = 0; p < spec.snr_grid_db.size(); ++p) {
        for (const Strategy& strat : spec.compare_strategies) {
          const NetworkConfig base = spec.network(strat);
          for (Design d : spec.designs) {
            const std::string label = to_string(d) + "@" + strat.label();
            emit(csv, sumrate_row(spec, base, d, label, spec.snr_grid_db[p], p),
                 spec.seed, hash);
          }
        }
      }
      break;
    }
    case ExperimentKind::ReducedAntennaCompare: {
      for (std::size_t w = 0; w < spec.network_sizes.size(); ++w) {
        const auto [n, m] = spec.network_sizes[w];
        const Design d = (m == n) ? Design::PzfSeparate : Design::PzfReduced;
        const NetworkConfig base = spec.network(n, m);
        for (std::size_t p = 0; p < spec.snr_grid_db.size(); ++p) {
          emit(csv,
               sumrate_row(spec, base, d, to_string(d), spec.snr_grid_db[p],
                           2000 + w * 64 + p),
               spec.seed, hash);
        }
      }
      break;
    }
    case ExperimentKind::SerSweep: {
      const NetworkConfig base = spec.network();
      const QamConstellation qam(spec.qam_order);
      for (std::size_t p = 0; p < spec.snr_grid_db.size(); ++p) {
        const double snr_linear = std::pow(10.0, spec.snr_grid_db[p] / 10.0);
        const NetworkConfig point = base.with_channel_model(
            base.channel_model().with_reference_snr(snr_linear));
        // One master per grid point: all designs and both cancellation
        // modes see identical channels, symbols and noise.
        const std::uint64_t master = Rng::derive_seed(spec.seed, 3000 + p);
        for (Design d : spec.designs) {
          const BeamformerFactory factory = [&](const CMatrix& h,
                                                const NetworkConfig& c) {
            return build_design(d, h, c, spec);
          };
          for (CancellationMode mode :
               {CancellationMode::Realistic, CancellationMode::GenieAided}) {
            const SerResult r = simulate_ser(point, factory, spec.trials, master,
                                             mode, qam, spec.threads);
            Row row{to_string(spec.kind),
                    to_string(d),
                    spec.snr_grid_db[p],
                    point.n_users(),
                    point.m_antennas(),
                    mode == CancellationMode::Realistic ? "ser" : "ser_genie",
                    r.aggregate_ser,
                    ser_stderr(r),
                    r.trials,
                    r.failures};
            emit(csv, row, spec.seed, hash);
          }
        }
      }
      break;
    }
  }
  return csv.str();
}

void run_experiment_to_file(const ExperimentSpec& spec) {
  if (spec.out_path.empty()) {
    throw std::invalid_argument("no output path configured");
  }
  const std::string csv = run_experiment(spec);
  std::ofstream out(spec.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + spec.out_path);
  out << csv;

  if (spec.trace_out.empty()) return;

  // Trace the first PZF design on the first grid point's first channel.
  std::optional<Design> traced;
  std::vector<Design> candidates = spec.designs;
  if (spec.kind == ExperimentKind::ReducedAntennaCompare) {
    for (auto [n, m] : spec.network_sizes) {
      candidates.push_back(m == n ? Design::PzfSeparate : Design::PzfReduced);
    }
  }
  for (Design d : candidates) {
    if (d == Design::PzfJoint || d == Design::PzfSeparate ||
        d == Design::PzfReduced) {
      traced = d;
      break;
    }
  }
  if (!traced) {
    throw std::invalid_argument("trace_out requires a PZF design");
  }

  NetworkConfig base = spec.network();
  if (spec.kind == ExperimentKind::ReducedAntennaCompare) {
    base = spec.network(spec.network_sizes[0].first, spec.network_sizes[0].second);
  } else if (spec.kind == ExperimentKind::UserCountSweep) {
    base = spec.network(spec.user_counts[0]);
  } else if (spec.kind == ExperimentKind::SchedulingCompare) {
    base = spec.network(spec.compare_strategies[0]);
  }
  const double snr_linear = std::pow(10.0, spec.snr_grid_db[0] / 10.0);
  const NetworkConfig point = base.with_channel_model(
      base.channel_model().with_reference_snr(snr_linear));
  std::uint64_t stream = 0;
  if (spec.kind == ExperimentKind::UserCountSweep) stream = 1000ULL << 32;
  if (spec.kind == ExperimentKind::ReducedAntennaCompare) stream = 2000ULL << 32;
  Rng rng(Rng::derive_seed(spec.seed, stream));
  const CMatrix h = generate_channel(point, rng);

  OptimizerConfig opt = spec.optimizer(*traced);
  opt.record_trace = true;
  OptimizeResult result;
  switch (*traced) {
    case Design::PzfJoint: result = optimize_joint(h, point, opt); break;
    case Design::PzfReduced: result = optimize_reduced(h, point, opt); break;
    default: result = optimize_separate(h, point, opt); break;
  }

  std::ofstream trace(spec.trace_out, std::ios::binary);
  if (!trace) throw std::runtime_error("cannot open trace file " + spec.trace_out);
  trace << "iteration,objective,power,gradient_norm\n";
  for (const auto& t : result.trace) {
    trace << t.iteration << "," << fmt(t.objective) << "," << fmt(t.power) << ","
          << fmt(t.gradient_norm) << "\n";
  }
}

}  // namespace mwrn
