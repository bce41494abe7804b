#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "mwrn/experiment.hpp"

using namespace mwrn;

namespace {

// Minimal RFC-4180 reader for checking the emitted documents.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
    } else if (c == '\n') {
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
    } else {
      field += c;
    }
  }
  return rows;
}

const char* kMinimalConfig =
    "experiment = sumrate\n"
    "n_users = 3\n"
    "m_antennas = 3\n"
    "designs = zf\n"
    "snr_db = 10\n";

}  // namespace

TEST_CASE("minimal config parses with documented defaults") {
  const auto spec = parse_config(kMinimalConfig);
  CHECK(spec.kind == ExperimentKind::SumRateSweep);
  CHECK(spec.n_users == 3);
  CHECK(spec.m_antennas == 3);
  CHECK(spec.designs == std::vector<Design>{Design::Zf});
  CHECK(spec.snr_grid_db == std::vector<double>{10});
  CHECK(spec.trials == 100);
  CHECK(spec.seed == 1);
  CHECK(spec.relay_power == 1.0);
  CHECK(!spec.heterogeneous);
  CHECK(spec.qam_order == 4);
}

TEST_CASE("config rejections carry line and field diagnostics") {
  const auto fails_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text);
      FAIL("expected config rejection for: " << text);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  fails_with("experiment = sumrate\nn_users = 3\nm_antennas = 1\n"
             "designs = pzf-reduced\nsnr_db = 10\n",
             "n_users - 1");
  fails_with("bogus_key = 1\n", "line 1");
  fails_with("bogus_key = 1\n", "unknown key");
  fails_with("experiment = sumrate\ntrials = zebra\n", "line 2");
  fails_with("n_users 3\n", "key = value");
  fails_with("user_power = 1\nuser_powers = 1,1\n", "conflicts");
  fails_with(std::string(kMinimalConfig) + "designs = \n", "missing value");
  fails_with(std::string(kMinimalConfig) + "trials = 0\n", "trials");
  fails_with("experiment = sumrate\nn_users = 3\nm_antennas = 3\nsnr_db = 10\n",
             "design list");
  fails_with("experiment = reduced-compare\nnetworks = 3:3\nsnr_db = 10\n"
             "designs = zf\n",
             "automatically");
  fails_with("experiment = sumrate\nn_users = 3\nm_antennas = 3\n"
             "designs = zf\nsnr_db = 10\nstrategy = hybrid:1:2\n",
             "multicast");
}

TEST_CASE("zero-forcing needs enough antennas, reduced needs exactly N-1") {
  CHECK_THROWS(parse_config("experiment = sumrate\nn_users = 3\nm_antennas = 2\n"
                            "designs = zf\nsnr_db = 10\n"));
  CHECK_NOTHROW(parse_config("experiment = sumrate\nn_users = 3\nm_antennas = 2\n"
                             "designs = pzf-reduced\nsnr_db = 10\n"));
  CHECK_THROWS(parse_config("experiment = sumrate\nn_users = 3\nm_antennas = 3\n"
                            "designs = pzf-reduced\nsnr_db = 10\n"));
}

TEST_CASE("presets encode the figure configurations") {
  const auto fig4 = preset("fig4");
  CHECK(fig4.kind == ExperimentKind::SumRateSweep);
  CHECK(fig4.n_users == 3);
  CHECK(fig4.m_antennas == 3);
  CHECK(fig4.relay_power == 1.0);
  CHECK(!fig4.heterogeneous);
  CHECK(fig4.user_powers.empty());  // broadcast unit powers

  const auto fig5 = preset("fig5");
  CHECK(fig5.kind == ExperimentKind::UserCountSweep);
  CHECK(fig5.m_antennas == 8);
  CHECK(fig5.user_counts == std::vector<int>{3, 4, 5, 6, 7, 8});
  CHECK(fig5.snr_grid_db == std::vector<double>{20});

  const auto fig10 = preset("fig10");
  CHECK(fig10.kind == ExperimentKind::SchedulingCompare);
  CHECK(fig10.heterogeneous);
  CHECK(fig10.distances == std::vector<double>{1, 1, 2});
  REQUIRE(fig10.compare_strategies.size() == 2);
  CHECK(fig10.compare_strategies[0].label() == "hybrid:1:2,3");
  CHECK(fig10.compare_strategies[1].label() == "hybrid:1:3,2");

  const auto fig12 = preset("fig12");
  CHECK(fig12.kind == ExperimentKind::ReducedAntennaCompare);
  REQUIRE(fig12.network_sizes.size() == 4);

  CHECK_THROWS_AS(preset("fig1"), std::invalid_argument);
  CHECK(preset_names().size() == 6);
}

TEST_CASE("canonical text round-trips through the parser") {
  for (const auto& name : preset_names()) {
    auto spec = preset(name);
    const std::string canonical = canonical_config_text(spec);
    const auto reparsed = parse_config(canonical);
    CHECK(canonical_config_text(reparsed) == canonical);
    CHECK(config_hash(reparsed) == config_hash(spec));
  }
}

TEST_CASE("sumrate experiment emits one deterministic row per design and point") {
  auto spec = parse_config(kMinimalConfig);
  spec.designs = {Design::Zf, Design::Mf};
  spec.snr_grid_db = {0, 10};
  spec.trials = 5;
  spec.seed = 42;

  const std::string csv = run_experiment(spec);
  const auto rows = parse_csv(csv);
  REQUIRE(rows.size() == 5);  // header + 2x2
  CHECK(rows[0] == std::vector<std::string>{
      "experiment", "design", "snr_db", "n_users", "m_antennas", "metric_name",
      "mean", "stderr", "trials", "failures", "seed", "config_hash"});
  for (std::size_t r = 1; r < rows.size(); ++r) {
    REQUIRE(rows[r].size() == 12);
    CHECK(rows[r][0] == "sumrate");
    CHECK(rows[r][5] == "sumrate");
    CHECK(std::stod(rows[r][6]) > 0.0);
    CHECK(rows[r][8] == "5");
    CHECK(rows[r][9] == "0");
    CHECK(rows[r][10] == "42");
  }
  // zf at 10 dB beats zf at 0 dB
  CHECK(std::stod(rows[3][6]) > std::stod(rows[1][6]));

  CHECK(run_experiment(spec) == csv);  // same spec, same bytes
  auto other = spec;
  other.seed = 43;
  CHECK(run_experiment(other) != csv);
}

TEST_CASE("ser experiment emits realistic and genie rows") {
  auto spec = parse_config(
      "experiment = ser\nn_users = 3\nm_antennas = 3\ndesigns = zf\n"
      "snr_db = 8\ntrials = 40\nseed = 9\n");
  const auto rows = parse_csv(run_experiment(spec));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][5] == "ser");
  CHECK(rows[2][5] == "ser_genie");
  const double ser = std::stod(rows[1][6]);
  CHECK(ser >= 0.0);
  CHECK(ser <= 1.0);
}

TEST_CASE("schedule comparison labels designs with their strategy") {
  auto spec = parse_config(
      "experiment = schedule-compare\nn_users = 3\nm_antennas = 3\n"
      "designs = zf\nsnr_db = 10\ntrials = 3\n"
      "compare_strategies = unicast ; hybrid:1:2,3\n");
  const auto rows = parse_csv(run_experiment(spec));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "zf@unicast");
  CHECK(rows[2][1] == "zf@hybrid:1:2,3");  // comma inside a quoted field
}

TEST_CASE("reduced comparison picks the design from the antenna count") {
  auto spec = parse_config(
      "experiment = reduced-compare\nnetworks = 3:3,3:2\nsnr_db = 10\n"
      "trials = 3\n");
  const auto rows = parse_csv(run_experiment(spec));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "pzf-separate");
  CHECK(rows[1][4] == "3");
  CHECK(rows[2][1] == "pzf-reduced");
  CHECK(rows[2][4] == "2");
}

TEST_CASE("user-count sweep varies the n_users column") {
  auto spec = parse_config(
      "experiment = sweep-users\nm_antennas = 4\nuser_counts = 3,4\n"
      "designs = zf\nsnr_db = 20\ntrials = 3\n");
  const auto rows = parse_csv(run_experiment(spec));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][3] == "3");
  CHECK(rows[2][3] == "4");
  CHECK(rows[1][2] == "20");
}

TEST_CASE("failed trials are counted, not silently dropped") {
  // M = N-1 forbids zero-forcing, so every zf trial fails while the
  // reduced design still succeeds.
  auto spec = parse_config(
      "experiment = sumrate\nn_users = 3\nm_antennas = 2\n"
      "designs = pzf-reduced\nsnr_db = 10\ntrials = 4\n");
  spec.designs = {Design::PzfReduced, Design::Zf};  // bypass parser validation
  const auto rows = parse_csv(run_experiment(spec));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][9] == "0");
  CHECK(rows[2][9] == "4");  // all zf trials failed
  CHECK(std::stod(rows[2][6]) == 0.0);
}

TEST_CASE("file output and optimizer trace") {
  auto spec = parse_config(kMinimalConfig);
  spec.designs = {Design::PzfSeparate};
  spec.trials = 2;
  spec.out_path = "/tmp/mwrn_test_out.csv";
  spec.trace_out = "/tmp/mwrn_test_trace.csv";
  run_experiment_to_file(spec);

  std::ifstream out(spec.out_path);
  REQUIRE(out.good());
  std::stringstream buffer;
  buffer << out.rdbuf();
  CHECK(buffer.str() == run_experiment(spec));

  std::ifstream trace(spec.trace_out);
  REQUIRE(trace.good());
  std::string header;
  std::getline(trace, header);
  CHECK(header == "iteration,objective,power,gradient_norm");
  // monotone objective trace
  double prev = 0.0;
  std::string line;
  int rows = 0;
  while (std::getline(trace, line)) {
    const auto fields = parse_csv(line + "\n");
    REQUIRE(fields[0].size() == 4);
    const double obj = std::stod(fields[0][1]);
    CHECK(obj >= prev - 1e-9);
    prev = obj;
    ++rows;
  }
  CHECK(rows >= 1);
  std::remove(spec.out_path.c_str());
  std::remove(spec.trace_out.c_str());
}

TEST_CASE("threaded and serial sumrate runs produce identical bytes") {
  auto spec = parse_config(kMinimalConfig);
  spec.designs = {Design::Zf, Design::PzfSeparate};
  spec.trials = 6;
  const std::string serial = run_experiment(spec);
  spec.threads = 3;
  CHECK(run_experiment(spec) == serial);
}
