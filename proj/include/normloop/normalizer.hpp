#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "normloop/ddl.hpp"
#include "normloop/fd_theory.hpp"
#include "normloop/llm_client.hpp"
#include "normloop/prompting.hpp"
#include "normloop/schema.hpp"
#include "normloop/verifier.hpp"

namespace normloop {

// ---------------------------------------------------------------------------
// Deterministic normalization
// ---------------------------------------------------------------------------

namespace detail {

class NameRegistry {
 public:
  explicit NameRegistry(const Schema& schema) {
    for (const auto& t : schema.tables) used_.insert(t.name);
  }
  std::string fresh(const std::string& base) {
    if (used_.insert(base).second) return base;
    for (int i = 2;; ++i) {
      std::string candidate = base + "_" + std::to_string(i);
      if (used_.insert(candidate).second) return candidate;
    }
  }

 private:
  std::set<std::string, ILess> used_;
};

inline FunctionalDependency key_dependency(const Table& t) {
  return FunctionalDependency::make(t.primary_key, t.column_names(), t.name);
}

inline void remove_column(Table& t, const std::string& name) {
  std::erase_if(t.columns, [&](const Column& c) { return iequals(c.name, name); });
}

inline Table child_table(const Table& parent, const std::string& name) {
  Table child;
  child.name = name;
  for (const auto& k : parent.primary_key) child.columns.push_back(*parent.find_column(k));
  for (auto& c : child.columns) c.annotations.clear();
  child.primary_key = parent.primary_key;
  child.foreign_keys.push_back({parent.primary_key, parent.name, parent.primary_key});
  return child;
}

struct WorkTable {
  Table table;
  FdList fds;
};

// Key -> rest is implied by the declared key; the rest is worth keeping.
inline FdList residual_fds(const Table& t, std::span<const FunctionalDependency> fds) {
  FdList out;
  for (auto fd : project_fds(fds, AttributeSet(t.column_names()))) {
    const bool from_key = std::all_of(t.primary_key.begin(), t.primary_key.end(),
                                      [&](const std::string& k) { return icontains(fd.lhs, k); });
    if (from_key) continue;
    fd.scope = t.name;
    out.push_back(std::move(fd));
  }
  return out;
}

}  // namespace detail

// 1NF repairs (missing keys, multivalued columns, repeating groups) followed by
// 3NF synthesis of every table; foreign keys are re-targeted to the fragment
// holding the referenced key.
inline Schema deterministic_normalize(const Schema& input) {
  const Schema schema = canonicalize(input);
  detail::NameRegistry names(schema);
  std::vector<detail::WorkTable> work;

  for (const auto& source : schema.tables) {
    detail::check_width(source.columns.size());
    Table parent = source;
    FdList fds = table_fds(schema, source);
    if (!parent.has_primary_key()) {
      // Pick the key among the columns that stay in the parent, so list-like
      // columns do not end up in it and block their own move.
      Table kept = parent;
      for (const auto& c : source.columns)
        if (c.is_multivalued()) detail::remove_column(kept, c.name);
      for (const auto& g : repeating_groups(kept))
        for (const auto& m : g.members) detail::remove_column(kept, m);
      if (kept.columns.empty()) kept = parent;
      parent.primary_key =
          candidate_keys(kept, project_fds(fds, AttributeSet(kept.column_names()))).front().to_vector();
    }
    fds.push_back(detail::key_dependency(parent));

    std::vector<Table> children;
    for (const auto& col : source.columns) {
      if (!col.is_multivalued()) continue;
      if (icontains(parent.primary_key, col.name)) {
        std::erase_if(parent.find_column(col.name)->annotations,
                      [](const ColumnAnnotation& a) { return a.kind == ColumnAnnotation::Kind::Multivalued; });
        continue;
      }
      Table child = detail::child_table(parent, names.fresh(parent.name + "_" + col.name));
      Column moved = col;
      std::erase_if(moved.annotations,
                    [](const ColumnAnnotation& a) { return a.kind == ColumnAnnotation::Kind::Multivalued; });
      child.columns.push_back(moved);
      child.primary_key.push_back(moved.name);
      detail::remove_column(parent, col.name);
      children.push_back(std::move(child));
    }
    for (const auto& group : repeating_groups(parent)) {
      const bool touches_key = std::any_of(group.members.begin(), group.members.end(),
                                           [&](const std::string& m) { return icontains(parent.primary_key, m); });
      if (touches_key) continue;
      Table child = detail::child_table(parent, names.fresh(parent.name + "_" + group.base));
      const std::string seq = icontains(parent.primary_key, "seq") ? "seq_no" : "seq";
      child.columns.push_back({seq, DataType::integer(), false, {}});
      Column value = *parent.find_column(group.members.front());
      value.name = group.base;
      value.annotations.clear();
      child.columns.push_back(value);
      child.primary_key.push_back(seq);
      for (const auto& m : group.members) detail::remove_column(parent, m);
      children.push_back(std::move(child));
    }

    FdList parent_fds = project_fds(fds, AttributeSet(parent.column_names()));
    std::erase_if(parent.foreign_keys, [&](const ForeignKey& fk) {
      return !std::all_of(fk.columns.begin(), fk.columns.end(), [&](const std::string& c) { return parent.has_column(c); });
    });
    work.push_back({std::move(parent), std::move(parent_fds)});
    for (auto& c : children) {
      FdList child_fds{detail::key_dependency(c)};
      work.push_back({std::move(c), std::move(child_fds)});
    }
  }

  Schema out;
  out.name = schema.name;
  std::map<std::string, std::vector<std::string>, ILess> fragments_of;
  for (auto& w : work) {
    auto parts = synthesize_3nf(w.table, w.fds);
    std::map<std::string, std::string> renamed;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      const std::string fresh = names.fresh(parts[i].name);
      renamed[parts[i].name] = fresh;
      parts[i].name = fresh;
    }
    for (auto& fk : parts.front().foreign_keys)
      if (auto it = renamed.find(fk.referenced_table); it != renamed.end()) fk.referenced_table = it->second;
    for (auto& p : parts) {
      fragments_of[w.table.name].push_back(p.name);
      for (auto& fd : detail::residual_fds(p, w.fds)) out.fds.push_back(std::move(fd));
      out.tables.push_back(std::move(p));
    }
  }

  // Re-target references to split tables.
  for (auto& t : out.tables) {
    std::vector<ForeignKey> kept;
    for (auto fk : t.foreign_keys) {
      auto frag = fragments_of.find(fk.referenced_table);
      if (frag != fragments_of.end() && frag->second.size() > 1) {
        const Table* target = nullptr;
        const AttributeSet wanted(fk.referenced_columns);
        for (const auto& name : frag->second) {
          const Table* cand = out.find_table(name);
          if (AttributeSet(cand->primary_key) == wanted) {
            target = cand;
            break;
          }
        }
        for (const auto& name : frag->second) {
          if (target) break;
          const Table* cand = out.find_table(name);
          if (std::all_of(fk.referenced_columns.begin(), fk.referenced_columns.end(),
                          [&](const std::string& c) { return cand->has_column(c); }))
            target = cand;
        }
        if (!target) continue;
        fk.referenced_table = target->name;
      }
      if (std::find(kept.begin(), kept.end(), fk) == kept.end()) kept.push_back(std::move(fk));
    }
    t.foreign_keys = std::move(kept);
  }
  return canonicalize(out);
}

// ---------------------------------------------------------------------------
// Generation backends
// ---------------------------------------------------------------------------

struct GenerationRequest {
  Schema schema;
  std::optional<std::string> feedback;
  NormalForm target = NormalForm::NF3;
  ShotMode shot_mode = ShotMode::Zero;
};

struct GenerationOutcome {
  Schema schema;
  std::optional<std::string> raw_reply;
  std::size_t prompt_tokens_est = 0;
  int parse_retries_used = 0;
  std::vector<std::string> prompts;  // every user message sent, in order
};

class GenerationFailed : public Error {
 public:
  GenerationFailed(const std::string& message, int retries, std::size_t tokens, std::vector<std::string> replies)
      : Error(message), retries_(retries), tokens_(tokens), replies_(std::move(replies)) {}

  int parse_retries_used() const noexcept { return retries_; }
  std::size_t prompt_tokens_est() const noexcept { return tokens_; }
  const std::vector<std::string>& replies() const noexcept { return replies_; }

 private:
  int retries_;
  std::size_t tokens_;
  std::vector<std::string> replies_;
};

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual GenerationOutcome generate(const GenerationRequest& request) = 0;
};

class DeterministicGenerator : public GeneratorBackend {
 public:
  GenerationOutcome generate(const GenerationRequest& request) override {
    GenerationOutcome out;
    out.schema = deterministic_normalize(request.schema);
    return out;
  }
};

inline constexpr int kMaxParseRetries = 2;

struct ModelSettings {
  std::string model_id;
  double temperature = 0.0;
  int max_output_tokens = 2048;

  static ModelSettings from(const BackendConfig& c) { return {c.model_id, c.temperature, c.max_output_tokens}; }
};

class LlmGenerator : public GeneratorBackend {
 public:
  LlmGenerator(std::shared_ptr<ChatBackend> backend, ModelSettings settings,
               std::optional<std::string> template_override = std::nullopt)
      : backend_(std::move(backend)), settings_(std::move(settings)), override_(std::move(template_override)) {}

  GenerationOutcome generate(const GenerationRequest& request) override {
    require_valid(request.schema);
    PromptTemplate tmpl = default_template(PromptRole::Generation, request.shot_mode);
    if (override_) tmpl.body = *override_;
    ChatRequest chat{settings_.model_id, {}, settings_.temperature, settings_.max_output_tokens};
    chat.messages.push_back({ChatRole::User, build_prompt(tmpl, request.schema, request.feedback, request.target)});

    GenerationOutcome out;
    std::vector<std::string> replies;
    for (int retry = 0;; ++retry) {
      out.prompts.push_back(chat.messages.back().content);
      for (const auto& m : chat.messages) out.prompt_tokens_est += estimate_tokens(m.content);
      const ChatResponse response = backend_->complete(chat);
      replies.push_back(response.content);
      std::string problem;
      try {
        out.schema = parse_ddl(extract_schema_block(response.content));
        out.raw_reply = response.content;
        out.parse_retries_used = retry;
        return out;
      } catch (const ExtractionError& e) {
        problem = e.what();
      } catch (const DdlParseError& e) {
        problem = std::string("the schema does not parse: ") + e.what();
      } catch (const SchemaInvalid& e) {
        problem = e.what();
      }
      if (retry == kMaxParseRetries)
        throw GenerationFailed("no usable schema after " + std::to_string(kMaxParseRetries) + " parse retries: " + problem,
                               retry, out.prompt_tokens_est, std::move(replies));
      chat.messages.push_back({ChatRole::Assistant, response.content});
      chat.messages.push_back({ChatRole::User, "Your reply could not be used: " + problem +
                                                   "\nReply again with the complete normalized schema in one ```sql "
                                                   "fenced block."});
    }
  }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ModelSettings settings_;
  std::optional<std::string> override_;
};

// ---------------------------------------------------------------------------
// Verification backends
// ---------------------------------------------------------------------------

class VerifierBackend {
 public:
  virtual ~VerifierBackend() = default;
  virtual VerificationReport verify(const Schema& schema, NormalForm target) = 0;
};

class DeterministicVerifier : public VerifierBackend {
 public:
  VerificationReport verify(const Schema& schema, NormalForm target) override {
    return verify_deterministic(schema, target);
  }
};

class LlmVerifier : public VerifierBackend {
 public:
  LlmVerifier(std::shared_ptr<ChatBackend> backend, ModelSettings settings,
              std::optional<std::string> template_override = std::nullopt)
      : backend_(std::move(backend)), settings_(std::move(settings)), override_(std::move(template_override)) {}

  VerificationReport verify(const Schema& schema, NormalForm target) override {
    require_valid(schema);
    PromptTemplate tmpl = default_template(PromptRole::Verification, ShotMode::Zero);
    if (override_) tmpl.body = *override_;
    const std::string prompt = build_prompt(tmpl, schema, std::nullopt, target);
    ChatRequest chat{settings_.model_id, {{ChatRole::User, prompt}}, settings_.temperature, settings_.max_output_tokens};
    for (int retry = 0;; ++retry) {
      const ChatResponse response = backend_->complete(chat);
      try {
        VerificationReport report = parse_verdict_block(response.content, target);
        report.prompt = prompt;
        report.raw_reply = response.content;
        return report;
      } catch (const VerdictParseError& e) {
        if (retry == kMaxParseRetries)
          throw VerifierReplyError("unparseable verdict after " + std::to_string(kMaxParseRetries) +
                                   " parse retries: " + e.what());
        chat.messages.push_back({ChatRole::Assistant, response.content});
        chat.messages.push_back({ChatRole::User, std::string("Your reply could not be used: ") + e.what() +
                                                     "\nReply again starting with the verdict lines."});
      }
    }
  }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ModelSettings settings_;
  std::optional<std::string> override_;
};

inline VerificationReport verify(const Schema& schema, NormalForm target, VerifierBackend& backend) {
  return backend.verify(schema, target);
}

}  // namespace normloop
