// warpkit command-line front end: simulate, check, fuzz, enumerate pairs,
// emit Verilog, and compare configuration sizes.
//
// Exit codes: 0 success/pass, 1 usage or parse error, 2 timeout,
// 3 verification failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "warpkit/backend.hpp"
#include "warpkit/checker.hpp"
#include "warpkit/core.hpp"
#include "warpkit/harness.hpp"
#include "warpkit/isa.hpp"

namespace {

using namespace warpkit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTimeout = 2;
constexpr int kExitVerification = 3;

bool color_enabled() {
  const char* v = std::getenv("WARPKIT_COLOR");
  return v && std::string(v) == "1";
}

std::string paint(const std::string& text, const char* code) {
  if (!color_enabled()) return text;
  return std::string("\033[") + code + "m" + text + "\033[0m";
}

std::string pass_fail(bool pass) {
  return pass ? paint("PASS", "32") : paint("FAIL", "31");
}

class CliError : public std::runtime_error {
 public:
  explicit CliError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CliError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CliError("cannot write " + path);
  f << text;
}

// --- run-config files: key=value, `#` comments -----------------------------

core::CoreConfig parse_config_text(const std::string& text, const std::string& path) {
  core::CoreConfig config;
  std::array<int, stagegraph::kNumStages> stage_values{};
  std::array<bool, stagegraph::kNumStages> stage_seen{};
  bool preset_seen = false;

  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CliError(path + ":" + std::to_string(ln) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);

    auto number = [&]() -> long long {
      try {
        size_t pos = 0;
        long long v = std::stoll(value, &pos, 0);
        if (pos != value.size()) throw std::invalid_argument("");
        return v;
      } catch (...) {
        throw CliError(path + ":" + std::to_string(ln) + ": bad value for " + key);
      }
    };

    if (key == "stages") {
      auto preset = stagegraph::StageMap::preset(static_cast<int>(number()));
      if (!preset) {
        throw CliError(path + ":" + std::to_string(ln) + ": stages must be 1, 5 or 7");
      }
      config.stage_map = *preset;
      preset_seen = true;
    } else if (key.rfind("stage.", 0) == 0) {
      auto stage = stagegraph::stage_from_name(key.substr(6));
      if (!stage) {
        throw CliError(path + ":" + std::to_string(ln) + ": unknown stage in key " + key);
      }
      stage_values[static_cast<size_t>(*stage)] = static_cast<int>(number());
      stage_seen[static_cast<size_t>(*stage)] = true;
    } else if (key == "mem_latency") {
      config.mem_latency = static_cast<int>(number());
    } else if (key == "mem_size") {
      config.mem_size = static_cast<uint32_t>(number());
    } else if (key == "max_cycles") {
      config.max_cycles = static_cast<uint64_t>(number());
    } else if (key == "max_pending_loads") {
      config.max_pending_loads = static_cast<int>(number());
    } else {
      throw CliError(path + ":" + std::to_string(ln) + ": unknown key '" + key + "'");
    }
  }

  bool any_stage = std::any_of(stage_seen.begin(), stage_seen.end(), [](bool b) { return b; });
  if (any_stage) {
    if (preset_seen) throw CliError(path + ": give either stages= or stage.* keys, not both");
    for (int i = 0; i < stagegraph::kNumStages; ++i) {
      if (!stage_seen[static_cast<size_t>(i)]) {
        throw CliError(path + ": explicit stage keys must cover all seven stages (missing stage." +
                       std::string(stagegraph::stage_name(static_cast<stagegraph::VirtualStage>(i))) +
                       ")");
      }
    }
    stagegraph::StageMap map;
    map.name = "custom";
    map.physical = stage_values;
    if (auto err = stagegraph::validate_stage_map(map)) throw CliError(path + ": " + err->message());
    config.stage_map = map;
  }
  try {
    core::validate_config(config);
  } catch (const core::ConfigError& e) {
    throw CliError(path + ": " + e.what());
  }
  return config;
}

core::CoreConfig load_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

// --- memory images: one 8-hex-digit little-endian word per line ------------

std::vector<uint8_t> parse_image_text(const std::string& text, const std::string& path) {
  std::vector<uint32_t> words;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string tok = line.substr(first, last - first + 1);
    if (tok.size() != 8 || tok.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
      throw CliError(path + ":" + std::to_string(ln) + ": expected an 8-hex-digit word");
    }
    words.push_back(static_cast<uint32_t>(std::stoul(tok, nullptr, 16)));
  }
  return isa::words_to_image(words);
}

std::string image_to_text(const std::vector<uint8_t>& image) {
  std::ostringstream os;
  for (size_t i = 0; i + 3 < image.size(); i += 4) {
    uint32_t w = static_cast<uint32_t>(image[i]) | (image[i + 1] << 8) | (image[i + 2] << 16) |
                 (static_cast<uint32_t>(image[i + 3]) << 24);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x\n", w);
    os << buf;
  }
  return os.str();
}

// --- report rendering -------------------------------------------------------

std::string report_to_json(const checker::CheckReport& report) {
  nlohmann::ordered_json j;
  j["pass"] = report.pass;
  j["programs_checked"] = report.programs_checked;
  j["instructions_checked"] = report.instructions_checked;
  nlohmann::ordered_json vs = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    nlohmann::ordered_json e;
    e["kind"] = checker::violation_name(v.kind);
    e["order"] = v.order;
    e["field"] = v.field;
    e["expected"] = v.expected;
    e["actual"] = v.actual;
    e["program"] = v.context;
    vs.push_back(e);
  }
  j["violations"] = vs;
  return j.dump(2) + "\n";
}

void print_report(const checker::CheckReport& report) {
  std::cout << pass_fail(report.pass) << ": " << report.programs_checked << " program(s), "
            << report.instructions_checked << " instruction(s) checked, "
            << report.violations.size() << " violation(s)\n";
  size_t shown = 0;
  for (const auto& v : report.violations) {
    std::cout << "  " << v.message() << "\n";
    if (++shown >= 20) {
      std::cout << "  ... " << (report.violations.size() - shown) << " more\n";
      break;
    }
  }
}

int finish_report(const checker::CheckReport& report, const std::string& out_path) {
  print_report(report);
  if (!out_path.empty()) write_file(out_path, report_to_json(report));
  return report.pass ? kExitOk : kExitVerification;
}

// --- subcommands -------------------------------------------------------------

int cmd_run(const std::string& config_path, const std::string& image_path,
            const std::string& trace_path) {
  core::CoreConfig config = load_config(config_path);
  std::vector<uint8_t> image = parse_image_text(read_file(image_path), image_path);
  core::SimResult res = core::simulate(config, image);
  if (!trace_path.empty()) write_file(trace_path, harness::trace_to_jsonl(res.trace));
  std::cout << "cycles " << res.stats.cycles << ", retired " << res.stats.retirements
            << ", squashed " << res.stats.squashed_slots << ", stalls " << res.stats.stall_cycles
            << ", load returns " << res.stats.load_return_injections << ", halted "
            << (res.stats.halted ? "yes" : "no") << "\n";
  if (!res.stats.halted) {
    std::cout << "timeout after " << res.stats.cycles << " cycles; trace is incomplete\n";
    return kExitTimeout;
  }
  return kExitOk;
}

int cmd_check(const std::string& trace_path, const std::string& image_path,
              const std::string& out_path, uint32_t mem_size) {
  RvfiTrace trace = harness::trace_from_jsonl(read_file(trace_path));
  std::vector<uint8_t> image = parse_image_text(read_file(image_path), image_path);
  checker::CheckReport report = checker::check_trace(trace, image, mem_size);
  return finish_report(report, out_path);
}

int cmd_fuzz(const std::string& config_path, uint64_t seed, int programs, int length, int jobs,
             const std::string& out_path) {
  core::CoreConfig config = load_config(config_path);
  checker::FuzzOptions opt;
  opt.length = length;
  opt.jobs = jobs;
  checker::CheckReport report = checker::fuzz(config, seed, programs, opt);
  return finish_report(report, out_path);
}

isa::InstrKind kind_from_name(const std::string& name) {
  for (int i = 0; i < isa::kNumInstrKinds; ++i) {
    if (name == isa::kind_name(static_cast<isa::InstrKind>(i))) {
      return static_cast<isa::InstrKind>(i);
    }
  }
  throw CliError("unknown instruction kind: " + name);
}

int cmd_pairs(const std::string& config_path, const std::string& kinds_csv,
              const std::string& regs_csv, const std::string& imms_csv,
              const std::string& out_path) {
  core::CoreConfig config = load_config(config_path);
  checker::PairSpec spec;
  spec.kinds.clear();
  std::istringstream ks(kinds_csv);
  std::string tok;
  while (std::getline(ks, tok, ',')) {
    if (!tok.empty()) spec.kinds.push_back(kind_from_name(tok));
  }
  if (!regs_csv.empty()) {
    spec.regs.clear();
    std::istringstream rs(regs_csv);
    while (std::getline(rs, tok, ',')) {
      if (tok.empty()) continue;
      if (tok[0] == 'x') tok = tok.substr(1);
      spec.regs.push_back(static_cast<uint8_t>(std::stoul(tok) & 31));
    }
  }
  if (!imms_csv.empty()) {
    spec.imms.clear();
    std::istringstream im(imms_csv);
    while (std::getline(im, tok, ',')) {
      if (!tok.empty()) spec.imms.push_back(static_cast<int32_t>(std::stol(tok)));
    }
  }
  uint64_t count = checker::pair_sequence_count(spec);
  std::cout << "enumerating " << count << " two-instruction sequences\n";
  checker::CheckReport report = checker::exhaustive_pairs(config, spec);
  return finish_report(report, out_path);
}

int cmd_gen(const std::string& config_path, const std::string& out_path) {
  core::CoreConfig config = load_config(config_path);
  stagegraph::DesignGraph graph = core::build_core(config);
  harness::attach_rvfi(graph);
  stagegraph::ElaboratedDesign design = stagegraph::elaborate(graph, config.stage_map);
  auto violations = backend::lint(design);
  if (!violations.empty()) {
    std::cout << pass_fail(false) << ": lint found " << violations.size() << " problem(s)\n";
    for (const auto& v : violations) std::cout << "  " << v.what << "\n";
    return kExitVerification;
  }
  std::string text = backend::emit_verilog(design, "warp_core", config.mem_size);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
    std::cout << "wrote " << out_path << " (" << text.size() << " bytes, "
              << design.staging_stats().registers << " staging registers)\n";
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& config_paths, const std::string& out_path) {
  std::vector<core::CoreConfig> configs;
  for (const auto& p : config_paths) configs.push_back(load_config(p));
  backend::SizeReport report = backend::size_report(configs);
  std::cout << backend::render_table(report);
  bool logs_match = true;
  for (size_t i = 1; i < report.entries.size(); ++i) {
    logs_match = logs_match && report.entries[i].construction_log ==
                                   report.entries[0].construction_log;
  }
  if (report.entries.size() > 1) {
    std::cout << "construction logs identical across configs: " << (logs_match ? "yes" : "no")
              << "\n";
  }
  if (!out_path.empty()) write_file(out_path, backend::report_to_json(report));
  return kExitOk;
}

int cmd_asm(const std::string& in_path, const std::string& out_path) {
  std::string source = read_file(in_path);
  std::vector<uint32_t> words;
  try {
    words = isa::assemble(source);
  } catch (const isa::AsmError& e) {
    std::cerr << in_path << ":" << e.what() << "\n";
    return kExitUsage;
  }
  std::string text = image_to_text(isa::words_to_image(words));
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
    std::cout << "wrote " << words.size() << " words to " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpkit: pipeline-flexible RV32I core generator and trace checker"};
  app.require_subcommand(1);

  std::string config_path, image_path, trace_path, out_path, in_path;
  std::vector<std::string> config_paths;
  uint64_t seed = 0;
  int programs = 100, length = 100, jobs = 1;
  uint32_t mem_size = 65536;
  std::string kinds = "addi,add,lw,sw,beq", regs, imms;

  auto* run = app.add_subcommand("run", "simulate an image and write a trace");
  run->add_option("--config", config_path)->required();
  run->add_option("--image", image_path)->required();
  run->add_option("--trace", trace_path);

  auto* check = app.add_subcommand("check", "verify a trace against the golden model");
  check->add_option("--trace", trace_path)->required();
  check->add_option("--image", image_path)->required();
  check->add_option("--out", out_path);
  check->add_option("--mem-size", mem_size);

  auto* fuzz = app.add_subcommand("fuzz", "run seeded random programs through the checker");
  fuzz->add_option("--config", config_path)->required();
  fuzz->add_option("--seed", seed);
  fuzz->add_option("--programs", programs);
  fuzz->add_option("--length", length);
  fuzz->add_option("--jobs", jobs);
  fuzz->add_option("--out", out_path);

  auto* pairs = app.add_subcommand("pairs", "bounded-exhaustive two-instruction checking");
  pairs->add_option("--config", config_path)->required();
  pairs->add_option("--kinds", kinds);
  pairs->add_option("--regs", regs);
  pairs->add_option("--imms", imms);
  pairs->add_option("--out", out_path);

  auto* gen = app.add_subcommand("gen", "emit Verilog for a configuration");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--out", out_path);

  auto* report = app.add_subcommand("report", "size comparison across configurations");
  report->add_option("configs", config_paths, "run-config files")->required();
  report->add_option("--out", out_path);

  auto* asm_cmd = app.add_subcommand("asm", "assemble a program into a memory image");
  asm_cmd->add_option("input", in_path, "assembly source")->required();
  asm_cmd->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, image_path, trace_path);
    if (check->parsed()) return cmd_check(trace_path, image_path, out_path, mem_size);
    if (fuzz->parsed()) return cmd_fuzz(config_path, seed, programs, length, jobs, out_path);
    if (pairs->parsed()) return cmd_pairs(config_path, kinds, regs, imms, out_path);
    if (gen->parsed()) return cmd_gen(config_path, out_path);
    if (report->parsed()) return cmd_report(config_paths, out_path);
    if (asm_cmd->parsed()) return cmd_asm(in_path, out_path);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const harness::TraceParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const checker::BoundExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const checker::MalformedTrace& e) {
    std::cerr << "error: malformed trace: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
