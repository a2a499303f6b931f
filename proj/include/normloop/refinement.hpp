#pragma once

// Generate -> verify -> feedback -> regenerate, until the verifier approves or
// the attempt budget runs out.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "normloop/fd_theory.hpp"
#include "normloop/interchange.hpp"
#include "normloop/llm_client.hpp"
#include "normloop/normalizer.hpp"
#include "normloop/verifier.hpp"

namespace normloop {

inline constexpr int kDefaultMaxAttempts = 3;
inline constexpr int kDefaultHardCap = 20;

struct RefinementConfig {
  int max_attempts = kDefaultMaxAttempts;
  int hard_cap = kDefaultHardCap;
  NormalForm target = NormalForm::NF3;
  ShotMode shot_mode = ShotMode::Zero;
  // Verify the input once before the loop. The report is kept for detection
  // scoring only and never sent as feedback.
  bool verify_input = true;
};

inline void validate_config(const RefinementConfig& c) {
  if (c.hard_cap < 1) throw InvalidArgument("hard_cap must be at least 1");
  if (c.max_attempts < 1) throw InvalidArgument("max_attempts must be at least 1");
  if (c.max_attempts > c.hard_cap)
    throw InvalidArgument("max_attempts " + std::to_string(c.max_attempts) + " exceeds the hard cap " +
                          std::to_string(c.hard_cap));
}

struct FailedGeneration {
  std::string message;
  int parse_retries_used = 0;
  std::size_t prompt_tokens_est = 0;
};

struct AttemptRecord {
  int index = 1;
  std::variant<GenerationOutcome, FailedGeneration> outcome;
  std::optional<VerificationReport> report;  // absent iff generation failed
  std::optional<std::string> feedback_sent;

  bool generated() const { return std::holds_alternative<GenerationOutcome>(outcome); }
  const GenerationOutcome& generation() const { return std::get<GenerationOutcome>(outcome); }
};

struct RefinementTranscript {
  Schema input_schema;
  std::optional<VerificationReport> input_report;
  std::vector<AttemptRecord> attempts;
  bool converged = false;
  Schema final_schema;
  std::size_t total_prompt_tokens_est = 0;
  bool aborted = false;
  std::string abort_reason;

  int attempts_used() const { return static_cast<int>(attempts.size()); }
};

// Copies dependencies from the source schema onto each generated table that
// matches a source table by column overlap, skipping ones the generated
// schema already implies. Generated schemas often drop the @fd lines; the
// dependencies are facts about the data, not something the model may erase.
inline Schema carry_forward_fds(const Schema& source, const Schema& generated) {
  Schema out = generated;
  for (const auto& t : generated.tables) {
    const Table* s = best_matching_table(t.column_names(), source.tables);
    if (!s || s->columns.size() > kMaxTableAttributes) continue;
    FdList truth = table_fds(source, *s);
    if (s->has_primary_key()) truth.push_back(FunctionalDependency::make(s->primary_key, s->column_names(), s->name));
    AttributeSet shared;
    for (const auto& c : t.columns)
      if (s->has_column(c.name)) shared.insert(s->find_column(c.name)->name);
    if (shared.size() < 2) continue;

    FdList own = table_fds(generated, t);
    if (t.has_primary_key()) own.push_back(FunctionalDependency::make(t.primary_key, t.column_names(), t.name));
    for (auto fd : project_fds(truth, shared)) {
      // Spell attributes the way the generated table does.
      for (auto* side : {&fd.lhs, &fd.rhs})
        for (auto& a : *side) a = t.find_column(a)->name;
      if (AttributeSet(fd.rhs).subset_of(closure(AttributeSet(fd.lhs), own))) continue;
      fd = FunctionalDependency::make(fd.lhs, fd.rhs, t.name);
      own.push_back(fd);
      out.fds.push_back(std::move(fd));
    }
  }
  return canonicalize(out);
}

inline RefinementTranscript run_refinement(const Schema& schema, GeneratorBackend& generator,
                                           VerifierBackend& verifier, const RefinementConfig& config = {}) {
  validate_config(config);
  require_valid(schema);
  RefinementTranscript tr;
  tr.input_schema = schema;
  tr.final_schema = schema;

  auto add_report_tokens = [&](const VerificationReport& r) {
    if (r.prompt) tr.total_prompt_tokens_est += estimate_tokens(*r.prompt);
  };

  try {
    if (config.verify_input) {
      tr.input_report = verifier.verify(schema, config.target);
      add_report_tokens(*tr.input_report);
    }
    Schema current = schema;
    std::optional<std::string> feedback;
    for (int k = 1; k <= config.max_attempts; ++k) {
      AttemptRecord rec;
      rec.index = k;
      if (k > 1) rec.feedback_sent = feedback;
      try {
        GenerationOutcome out = generator.generate({current, rec.feedback_sent, config.target, config.shot_mode});
        out.schema = carry_forward_fds(schema, out.schema);
        tr.total_prompt_tokens_est += out.prompt_tokens_est;
        rec.outcome = std::move(out);
      } catch (const GenerationFailed& e) {
        tr.total_prompt_tokens_est += e.prompt_tokens_est();
        rec.outcome = FailedGeneration{e.what(), e.parse_retries_used(), e.prompt_tokens_est()};
        tr.attempts.push_back(std::move(rec));
        continue;  // previous feedback is forwarded unchanged
      }
      // Keep the attempt visible even if the verifier aborts the run.
      tr.attempts.push_back(std::move(rec));
      AttemptRecord& last = tr.attempts.back();
      current = last.generation().schema;
      tr.final_schema = current;
      last.report = verifier.verify(current, config.target);
      add_report_tokens(*last.report);
      if (last.report->passes_target()) {
        tr.converged = true;
        break;
      }
      feedback = render_feedback(*last.report);
    }
  } catch (const BackendError& e) {
    tr.aborted = true;
    tr.abort_reason = e.what();
    tr.converged = false;
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const AttemptRecord& a) {
  Json j;
  j["index"] = a.index;
  if (a.generated()) {
    const auto& g = a.generation();
    Json o;
    o["status"] = "GENERATED";
    o["schema"] = to_json(g.schema);
    o["raw_reply"] = g.raw_reply ? Json(*g.raw_reply) : Json(nullptr);
    o["reply_digest"] = g.raw_reply ? Json(sha256_hex(*g.raw_reply)) : Json(nullptr);
    o["prompt_tokens_est"] = g.prompt_tokens_est;
    o["parse_retries_used"] = g.parse_retries_used;
    o["prompts"] = g.prompts;
    j["outcome"] = std::move(o);
  } else {
    const auto& f = std::get<FailedGeneration>(a.outcome);
    Json o;
    o["status"] = "GENERATION_FAILED";
    o["message"] = f.message;
    o["prompt_tokens_est"] = f.prompt_tokens_est;
    o["parse_retries_used"] = f.parse_retries_used;
    j["outcome"] = std::move(o);
  }
  j["report"] = a.report ? to_json(*a.report) : Json(nullptr);
  j["feedback_sent"] = a.feedback_sent ? Json(*a.feedback_sent) : Json(nullptr);
  return j;
}

inline Json to_json(const RefinementTranscript& t) {
  Json attempts = Json::array();
  for (const auto& a : t.attempts) attempts.push_back(to_json(a));
  Json j;
  j["input_schema"] = to_json(t.input_schema);
  j["input_report"] = t.input_report ? to_json(*t.input_report) : Json(nullptr);
  j["attempts"] = std::move(attempts);
  j["converged"] = t.converged;
  j["final_schema"] = to_json(t.final_schema);
  j["total_prompt_tokens_est"] = t.total_prompt_tokens_est;
  j["aborted"] = t.aborted;
  j["abort_reason"] = t.aborted ? Json(t.abort_reason) : Json(nullptr);
  return j;
}

}  // namespace normloop
