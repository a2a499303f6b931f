#pragma once

// normloop command line: parse, verify, normalize, inject, bench, prompt.
//
// Exit codes: 0 success, 1 domain failure (FAIL verdict, no convergence,
// injection impossible), 2 usage or input error, 3 backend/transport error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "normloop/benchmark.hpp"
#include "normloop/config.hpp"
#include "normloop/datasets.hpp"
#include "normloop/ddl.hpp"
#include "normloop/interchange.hpp"
#include "normloop/llm_client.hpp"
#include "normloop/normalizer.hpp"
#include "normloop/prompting.hpp"
#include "normloop/refinement.hpp"

namespace normloop {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kDomainFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kBackend = 3;
}  // namespace exit_code

namespace cli_detail {

inline constexpr const char* kDefaultConfig = "normloop.toml";

// Raised for bad flags or inputs that CLI11 cannot see (exit 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string read_file(const std::string& path) {
  // A directory opens fine as a stream and reads as empty.
  if (std::filesystem::is_directory(path)) throw UsageError(path + " is a directory");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

inline Schema load_schema(const std::string& path, std::ostream& err) {
  DdlDocument doc = parse_ddl_document(read_file(path));
  for (const auto& w : doc.warnings) err << "warning: " << w << "\n";
  return doc.schema;
}

inline NormalForm nf_flag(int level) {
  if (level < 1 || level > 3) throw UsageError("normal form must be 1, 2 or 3");
  return static_cast<NormalForm>(level);
}

inline ShotMode shots_flag(const std::string& s) {
  auto m = shot_mode_from_string(s);
  if (!m) throw UsageError("--shots must be 0, 1 or few");
  return *m;
}

inline BackendConfig default_http_config(bool generation) {
  BackendConfig c;
  c.kind = BackendKind::HttpChat;
  c.endpoint_url = "https://api.openai.com/v1/chat/completions";
  c.model_id = generation ? "gpt-4" : "o1-mini";
  c.credential_env_var = "OPENAI_API_KEY";
  return c;
}

struct BackendSet {
  std::unique_ptr<GeneratorBackend> generator;
  std::unique_ptr<VerifierBackend> verifier;
  // Unkeyed replay and recording both depend on call order.
  bool order_sensitive = false;
};

class BackendFactory {
 public:
  BackendFactory(std::string config_path, std::optional<std::string> gen_template,
                 std::optional<std::string> ver_template)
      : config_path_(std::move(config_path)),
        gen_template_(std::move(gen_template)),
        ver_template_(std::move(ver_template)) {}

  BackendSet make(const std::string& gen_kind, const std::string& ver_kind) {
    BackendSet set;
    if (gen_kind == "det") {
      set.generator = std::make_unique<DeterministicGenerator>();
    } else if (gen_kind == "llm") {
      const BackendConfig c = config().generation.value_or(default_http_config(true));
      set.generator = std::make_unique<LlmGenerator>(chat(c, set), ModelSettings::from(c), gen_template_);
    } else {
      throw UsageError("generator backend must be det or llm");
    }
    if (ver_kind == "det") {
      set.verifier = std::make_unique<DeterministicVerifier>();
    } else if (ver_kind == "llm") {
      const BackendConfig c = config().verification.value_or(default_http_config(false));
      set.verifier = std::make_unique<LlmVerifier>(chat(c, set), ModelSettings::from(c), ver_template_);
    } else {
      throw UsageError("verifier backend must be det or llm");
    }
    return set;
  }

 private:
  const LlmConfig& config() {
    if (!config_) {
      // A missing default config means "use the built-in HTTP defaults".
      if (std::filesystem::exists(config_path_)) config_ = load_llm_config(config_path_);
      else if (config_path_ != kDefaultConfig) throw UsageError("config file " + config_path_ + " not found");
      else config_ = LlmConfig{};
    }
    return *config_;
  }

  std::shared_ptr<ChatBackend> chat(const BackendConfig& c, BackendSet& set) {
    if (c.kind == BackendKind::Scripted) {
      // Both roles may replay one session file; they must share its cursor.
      auto& slot = scripted_[c.script_path];
      if (!slot) slot = make_backend(c);
      if (auto s = std::dynamic_pointer_cast<ScriptedBackend>(slot); s && !s->keyed()) set.order_sensitive = true;
      return slot;
    }
    if (!c.record_path.empty()) set.order_sensitive = true;
    return make_backend(c);
  }

  std::string config_path_;
  std::optional<std::string> gen_template_;
  std::optional<std::string> ver_template_;
  std::optional<LlmConfig> config_;
  std::map<std::string, std::shared_ptr<ChatBackend>> scripted_;
};

inline std::optional<std::string> template_flag(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_file(path);
}

struct Options {
  // shared
  std::string file;
  std::string config = kDefaultConfig;
  std::string gen_template;
  std::string ver_template;
  int nf = 3;
  std::string shots = "0";
  bool json = false;
  // verify / normalize
  std::string backend = "det";
  std::string gen;
  std::string ver;
  int max_attempts = kDefaultMaxAttempts;
  int hard_cap = kDefaultHardCap;
  std::string transcript;
  // inject / bench
  std::string schema_name;
  int count = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int trials = 20;
  int workers = 0;
  std::string report;
  std::string format = "text";
  std::string nf_list = "3";
  std::string transcripts_dir;
  // prompt
  std::string mode = "gen";
  std::string feedback_file;
};

inline int cmd_parse(const Options& o, std::ostream& out, std::ostream& err) {
  const Schema s = canonicalize(load_schema(o.file, err));
  out << to_json(s).dump(2) << "\n";
  return exit_code::kOk;
}

inline int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const Schema s = load_schema(o.file, err);
  BackendFactory factory(o.config, std::nullopt, template_flag(o.ver_template));
  auto set = factory.make("det", o.backend);
  const VerificationReport r = verify(s, nf_flag(o.nf), *set.verifier);
  if (o.json) out << to_json(r).dump(2) << "\n";
  else out << render_report_text(r);
  return r.passes_target() ? exit_code::kOk : exit_code::kDomainFailure;
}

inline int cmd_normalize(const Options& o, std::ostream& out, std::ostream& err) {
  const Schema s = load_schema(o.file, err);
  BackendFactory factory(o.config, template_flag(o.gen_template), template_flag(o.ver_template));
  auto set = factory.make(o.gen.empty() ? o.backend : o.gen, o.ver.empty() ? o.backend : o.ver);
  RefinementConfig rc;
  rc.max_attempts = o.max_attempts;
  rc.hard_cap = o.hard_cap;
  rc.target = nf_flag(o.nf);
  rc.shot_mode = shots_flag(o.shots);
  try {
    validate_config(rc);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const RefinementTranscript tr = run_refinement(s, *set.generator, *set.verifier, rc);
  if (!o.transcript.empty()) write_file(o.transcript, to_json(tr).dump(2) + "\n");
  if (tr.aborted) {
    err << "error: backend failure: " << tr.abort_reason << "\n";
    return exit_code::kBackend;
  }
  out << emit_ddl(tr.final_schema);
  err << (tr.converged ? "converged" : "not converged") << " after " << tr.attempts_used() << " attempt"
      << (tr.attempts_used() == 1 ? "" : "s") << "\n";
  return tr.converged ? exit_code::kOk : exit_code::kDomainFailure;
}

inline std::optional<BundledDataset> dataset_flag(const std::string& name) {
  if (name.empty()) return std::nullopt;
  auto d = find_dataset(name);
  if (!d) throw UsageError("unknown schema '" + name + "' (expected Orders, Advertising or AirportDB)");
  return d;
}

inline int cmd_inject(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.count < 1) throw UsageError("--count must be at least 1");
  if (o.file.empty() == o.schema_name.empty()) throw UsageError("give either a schema file or --schema NAME");
  Schema base;
  std::optional<Table> synthetic;
  std::string stem;
  if (auto d = dataset_flag(o.schema_name)) {
    base = d->schema;
    synthetic = d->synthetic_table;
    stem = to_lower(d->name);
  } else {
    base = load_schema(o.file, err);
    stem = std::filesystem::path(o.file).stem().string();
  }
  const NormalForm nf = nf_flag(o.nf);
  GroundTruth gt;
  try {
    gt = inject_anomalies(base, nf, o.count, o.seed, synthetic);
  } catch (const InjectionImpossible& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kDomainFailure;
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::filesystem::create_directories(o.out_dir);
  const std::string prefix = stem + "_" + to_lower(to_string(nf)) + "_seed" + std::to_string(o.seed);
  const auto sql = (std::filesystem::path(o.out_dir) / (prefix + ".sql")).string();
  const auto truth = (std::filesystem::path(o.out_dir) / (prefix + ".truth.json")).string();
  write_file(sql, emit_ddl(gt.mutated_schema));
  write_file(truth, to_json(gt).dump(2) + "\n");
  out << sql << "\n" << truth << "\n";
  for (const auto& r : gt.records)
    out << "  #" << r.id << " " << to_string(r.kind) << " " << r.table << " (" << join(r.columns, ", ") << ")\n";
  return exit_code::kOk;
}

inline std::vector<NormalForm> nf_list_flag(const std::string& s) {
  if (to_lower(s) == "all") return {std::begin(kAllNormalForms), std::end(kAllNormalForms)};
  std::vector<NormalForm> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(nf_flag(std::stoi(part)));
    } catch (const std::logic_error&) {
      throw UsageError("--nf expects 1, 2, 3, a comma list or all");
    }
  }
  if (out.empty()) throw UsageError("--nf expects 1, 2, 3, a comma list or all");
  return out;
}

inline int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<BundledDataset> sets;
  if (to_lower(o.schema_name) == "all") sets = bundled_datasets();
  else sets.push_back(*dataset_flag(o.schema_name));
  const auto nfs = nf_list_flag(o.nf_list);
  const auto format = report_format_from_string(o.format);
  if (!format) throw UsageError("--format must be text, csv or json");
  if (o.trials < 1) throw UsageError("--trials must be at least 1");
  if (o.count < 1) throw UsageError("--count must be at least 1");

  BackendFactory factory(o.config, template_flag(o.gen_template), template_flag(o.ver_template));
  // Options are shared between subcommands, so defaults live here.
  auto set = factory.make(o.gen.empty() ? "det" : o.gen, o.ver.empty() ? "det" : o.ver);
  RefinementConfig rc;
  rc.max_attempts = o.max_attempts;
  rc.hard_cap = o.hard_cap;
  rc.shot_mode = shots_flag(o.shots);
  try {
    validate_config(rc);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  std::vector<MetricsReport> reports;
  bool all_excluded = false;
  for (const auto& d : sets) {
    for (NormalForm nf : nfs) {
      TrialPlan plan = plan_for(d, nf, o.trials, o.seed);
      plan.anomaly_count = o.count;
      plan.workers = set.order_sensitive ? 1 : o.workers;
      rc.target = NormalForm::NF3;
      std::vector<RefinementTranscript> transcripts;
      reports.push_back(run_trials(plan, *set.generator, *set.verifier, rc,
                                   o.transcripts_dir.empty() ? nullptr : &transcripts));
      if (reports.back().excluded_trials == reports.back().trials) all_excluded = true;
      if (!o.transcripts_dir.empty()) {
        std::filesystem::create_directories(o.transcripts_dir);
        for (std::size_t t = 0; t < transcripts.size(); ++t) {
          const auto name = to_lower(d.name) + "_" + to_lower(to_string(nf)) + "_trial" + std::to_string(t) + ".json";
          write_file((std::filesystem::path(o.transcripts_dir) / name).string(), to_json(transcripts[t]).dump(2) + "\n");
        }
      }
    }
  }
  const std::string text = render_report(reports, *format);
  if (!o.report.empty()) write_file(o.report, text);
  out << text;
  if (all_excluded) {
    err << "error: every trial of at least one configuration aborted on a backend error\n";
    return exit_code::kBackend;
  }
  return exit_code::kOk;
}

inline int cmd_prompt(const Options& o, std::ostream& out, std::ostream& err) {
  const Schema s = load_schema(o.file, err);
  PromptRole role;
  if (o.mode == "gen") role = PromptRole::Generation;
  else if (o.mode == "ver") role = PromptRole::Verification;
  else throw UsageError("--mode must be gen or ver");
  PromptTemplate tmpl = default_template(role, shots_flag(o.shots));
  if (auto body = template_flag(role == PromptRole::Generation ? o.gen_template : o.ver_template)) tmpl.body = *body;
  std::optional<std::string> feedback;
  if (!o.feedback_file.empty()) feedback = read_file(o.feedback_file);
  const std::string prompt = build_prompt(tmpl, s, feedback, nf_flag(o.nf));
  out << prompt;
  if (!prompt.ends_with("\n")) out << "\n";
  out << "estimated_tokens: " << estimate_tokens(prompt) << "\n";
  return exit_code::kOk;
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Schema normalization with a generate/verify refinement loop", "normloop"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", o.config, "LLM backend config file")->capture_default_str();
  };
  auto add_templates = [&](CLI::App* c) {
    c->add_option("--gen-template", o.gen_template, "generation prompt template file");
    c->add_option("--ver-template", o.ver_template, "verification prompt template file");
  };

  auto* parse = app.add_subcommand("parse", "print the canonical interchange form of a DDL file");
  parse->add_option("file", o.file, "schema file")->required();

  auto* ver = app.add_subcommand("verify", "check a schema against 1NF..target");
  ver->add_option("file", o.file, "schema file")->required();
  ver->add_option("--nf", o.nf, "target normal form (1-3)")->capture_default_str();
  ver->add_option("--backend", o.backend, "det or llm")->capture_default_str();
  ver->add_flag("--json", o.json, "print the report as JSON");
  add_config(ver);
  add_templates(ver);

  auto* norm = app.add_subcommand("normalize", "run the refinement loop and print the final schema");
  norm->add_option("file", o.file, "schema file")->required();
  norm->add_option("--backend", o.backend, "det or llm for both roles")->capture_default_str();
  norm->add_option("--gen", o.gen, "override the generator backend");
  norm->add_option("--ver", o.ver, "override the verifier backend");
  norm->add_option("--max-attempts", o.max_attempts, "refinement attempts")->capture_default_str();
  norm->add_option("--hard-cap", o.hard_cap, "upper bound for --max-attempts")->capture_default_str();
  norm->add_option("--target", o.nf, "target normal form (1-3)")->capture_default_str();
  norm->add_option("--shots", o.shots, "0, 1 or few")->capture_default_str();
  norm->add_option("--transcript", o.transcript, "write the JSON transcript here");
  add_config(norm);
  add_templates(norm);

  auto* inj = app.add_subcommand("inject", "plant seeded anomalies and write the ground truth");
  inj->add_option("file", o.file, "clean schema file");
  inj->add_option("--schema", o.schema_name, "bundled dataset instead of a file");
  inj->add_option("--nf", o.nf, "normal form to violate (1-3)")->required();
  inj->add_option("--count", o.count, "anomalies to inject")->capture_default_str();
  inj->add_option("--seed", o.seed, "RNG seed")->required();
  inj->add_option("--out", o.out_dir, "output directory")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "run injected-anomaly trials and report metrics");
  bench->add_option("--schema", o.schema_name, "Orders, Advertising, AirportDB or all")->required();
  bench->add_option("--nf", o.nf_list, "1, 2, 3, a comma list or all")->capture_default_str();
  bench->add_option("--trials", o.trials, "trials per configuration")->capture_default_str();
  bench->add_option("--count", o.count, "anomalies per trial")->capture_default_str();
  bench->add_option("--seed", o.seed, "base RNG seed")->required();
  bench->add_option("--gen", o.gen, "det or llm (default det)");
  bench->add_option("--ver", o.ver, "det or llm (default det)");
  bench->add_option("--max-attempts", o.max_attempts, "refinement attempts")->capture_default_str();
  bench->add_option("--hard-cap", o.hard_cap, "upper bound for --max-attempts")->capture_default_str();
  bench->add_option("--shots", o.shots, "0, 1 or few")->capture_default_str();
  bench->add_option("--workers", o.workers, "parallel trials (0: one per CPU)")->capture_default_str();
  bench->add_option("--report", o.report, "also write the report here");
  bench->add_option("--format", o.format, "text, csv or json")->capture_default_str();
  bench->add_option("--transcripts", o.transcripts_dir, "write every trial transcript into this directory");
  add_config(bench);
  add_templates(bench);

  auto* prompt = app.add_subcommand("prompt", "print a prompt and its token estimate");
  prompt->add_option("--schema", o.file, "schema file")->required();
  prompt->add_option("--mode", o.mode, "gen or ver")->capture_default_str();
  prompt->add_option("--shots", o.shots, "0, 1 or few")->capture_default_str();
  prompt->add_option("--nf", o.nf, "target normal form (1-3)")->capture_default_str();
  prompt->add_option("--feedback", o.feedback_file, "file whose text is passed as verifier feedback");
  add_templates(prompt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (*parse) return cmd_parse(o, out, err);
    if (*ver) return cmd_verify(o, out, err);
    if (*norm) return cmd_normalize(o, out, err);
    if (*inj) return cmd_inject(o, out, err);
    if (*bench) return cmd_bench(o, out, err);
    if (*prompt) return cmd_prompt(o, out, err);
  } catch (const BackendError& e) {
    err << "error: backend failure: " << e.what() << "\n";
    return exit_code::kBackend;
  } catch (const AttributeLimitExceeded& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const DdlParseError& e) {
    err << "error: " << o.file << ":" << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const Error& e) {
    // UsageError, SchemaInvalid, InvalidArgument and friends.
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kUsage;
  }
  return exit_code::kUsage;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"normloop"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace normloop
