#include "udasa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "udasa/errors.hpp"
#include "udasa/rng.hpp"

namespace udasa {

namespace fs = std::filesystem;

std::vector<Prompt> ingest_prompts(const fs::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw InvalidInput("cannot open prompt file " + path.string());

  std::vector<Prompt> prompts;
  std::set<std::string> seen;
  std::vector<std::string> duplicates;
  const bool is_jsonl = path.extension() == ".jsonl";

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      if (!is_jsonl) std::fprintf(stderr, "warning: %s:%zu: blank line skipped\n",
                                  path.string().c_str(), line_no);
      continue;
    }
    Prompt p;
    if (is_jsonl) {
      ojson rec;
      try {
        rec = ojson::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                           ": malformed JSON: " + e.what());
      }
      if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
          !rec.contains("text") || !rec["text"].is_string())
        throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                           ": prompt record needs string fields id and text");
      p.id = rec["id"].get<std::string>();
      p.text = rec["text"].get<std::string>();
    } else {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      p.id = "p" + std::to_string(line_no);
      p.text = line;
    }
    if (p.id.empty() || p.text.empty())
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) +
                         ": prompt id and text must be non-empty");
    if (!seen.insert(p.id).second) duplicates.push_back(p.id);
    prompts.push_back(std::move(p));
  }
  if (!duplicates.empty()) {
    std::string ids;
    for (const auto& d : duplicates) ids += (ids.empty() ? "" : ", ") + d;
    throw InvalidInput("duplicate prompt ids in " + path.string() + ": " + ids);
  }
  if (prompts.empty()) throw InvalidInput("prompt file " + path.string() + " is empty");
  return prompts;
}

ojson to_record(const ScoredResponse& r) {
  ojson rec;
  rec["prompt_id"] = r.prompt_id;
  rec["response_id"] = r.response_id;
  rec["text"] = r.text;
  rec["u_sem"] = r.breakdown.u_sem;
  rec["u_fact"] = r.breakdown.u_fact;
  rec["u_align"] = r.breakdown.u_align;
  rec["alpha_sem"] = r.breakdown.alpha_sem;
  rec["alpha_fact"] = r.breakdown.alpha_fact;
  rec["alpha_align"] = r.breakdown.alpha_align;
  rec["u_total"] = r.breakdown.u_total;
  return rec;
}

ScoredResponse scored_response_from_record(const ojson& rec) {
  ScoredResponse r;
  r.prompt_id = rec.at("prompt_id").get<std::string>();
  r.response_id = rec.at("response_id").get<std::string>();
  r.text = rec.at("text").get<std::string>();
  r.breakdown.u_sem = rec.at("u_sem").get<double>();
  r.breakdown.u_fact = rec.at("u_fact").get<double>();
  r.breakdown.u_align = rec.at("u_align").get<double>();
  r.breakdown.alpha_sem = rec.at("alpha_sem").get<double>();
  r.breakdown.alpha_fact = rec.at("alpha_fact").get<double>();
  r.breakdown.alpha_align = rec.at("alpha_align").get<double>();
  r.breakdown.u_total = rec.at("u_total").get<double>();
  return r;
}

std::vector<std::vector<ScoredResponse>> group_by_prompt(const std::vector<ScoredResponse>& rs) {
  std::vector<std::vector<ScoredResponse>> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rs) {
    auto [it, inserted] = index.try_emplace(r.prompt_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(r);
  }
  return groups;
}

std::vector<ScoredResponse> load_scored_responses(const fs::path& run_dir) {
  const fs::path path = run_dir / "responses.jsonl";
  if (!fs::exists(path)) throw Error("missing " + path.string());
  std::vector<ScoredResponse> out;
  for (const auto& rec : jsonl::load(path)) out.push_back(scored_response_from_record(rec));
  return out;
}

void validate_scored_responses(const std::vector<ScoredResponse>& rs) {
  for (const auto& r : rs) {
    const auto recomputed = fuse(r.breakdown.u_sem, r.breakdown.u_fact, r.breakdown.u_align);
    const double tol = 1e-9;
    if (std::abs(recomputed.u_total - r.breakdown.u_total) > tol ||
        std::abs(recomputed.alpha_sem - r.breakdown.alpha_sem) > tol ||
        std::abs(recomputed.alpha_fact - r.breakdown.alpha_fact) > tol ||
        std::abs(recomputed.alpha_align - r.breakdown.alpha_align) > tol)
      throw InvalidInput("stored breakdown for " + r.prompt_id + "/" + r.response_id +
                         " does not match fuse() recomputation");
  }
  for (const auto& group : group_by_prompt(rs)) {
    for (const auto& r : group) {
      if (r.breakdown.u_sem != group.front().breakdown.u_sem)
        throw InvalidInput("u_sem varies within prompt group " + r.prompt_id);
    }
  }
}

std::uint64_t prompt_seed_for(std::uint64_t run_seed, const std::string& prompt_id) {
  return mix64(run_seed, fnv1a64(prompt_id));
}

namespace {

std::string response_id_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "r%03d", index + 1);
  return std::string(buf);
}

}  // namespace

std::vector<ScoredResponse> score_prompt(const Prompt& prompt, int n, double temperature,
                                         const ProviderSet& providers,
                                         std::uint64_t prompt_seed) {
  GenerationRequest req;
  req.prompt_text = prompt.text;
  req.n = n;
  req.temperature = temperature;
  req.seed = static_cast<std::int64_t>(prompt_seed);
  const std::vector<std::string> responses = providers.generator->generate(req);

  const std::vector<EmbeddingVector> embeddings = providers.embedder->embed(responses);
  const double u_sem = semantic_uncertainty(embeddings);

  std::vector<ScoredResponse> out;
  out.reserve(responses.size());
  for (std::size_t i = 0; i < responses.size(); ++i) {
    // The raw question is the NLI premise; the generation template is not
    // part of the claim being checked.
    const double u_fact =
        factual_uncertainty(providers.nli->score(prompt.text, responses[i]));
    const double u_align = alignment_uncertainty(providers.safety->moderate(responses[i]));
    ScoredResponse r;
    r.prompt_id = prompt.id;
    r.response_id = response_id_for(static_cast<int>(i));
    r.text = responses[i];
    r.breakdown = fuse(u_sem, u_fact, u_align);
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct PromptOutcome {
  bool attempted = false;
  bool ok = false;
  std::string error_kind;
  std::string error_message;
  std::vector<ScoredResponse> records;
};

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return std::string(buf);
}

}  // namespace

void write_or_check_manifest(const fs::path& run_dir, std::uint64_t seed, int n_responses,
                             const ProviderSet& providers, bool force) {
  const fs::path path = run_dir / "manifest.json";
  ojson fingerprints;
  fingerprints["generator"] = providers.generator->fingerprint();
  fingerprints["embedder"] = providers.embedder->fingerprint();
  fingerprints["nli"] = providers.nli->fingerprint();
  fingerprints["safety"] = providers.safety->fingerprint();

  if (fs::exists(path) && !force) {
    const ojson existing = ojson::parse(std::ifstream(path));
    if (existing.at("seed").get<std::uint64_t>() != seed ||
        existing.at("n_responses").get<int>() != n_responses)
      throw Error("run dir " + run_dir.string() +
                  " was created with a different seed or n_responses; pass --force to overwrite");
    return;
  }
  char run_id[32];
  std::snprintf(run_id, sizeof(run_id), "run-%016llx",
                static_cast<unsigned long long>(mix64(seed, n_responses)));
  ojson manifest;
  manifest["run_id"] = std::string(run_id);
  manifest["seed"] = seed;
  manifest["n_responses"] = n_responses;
  manifest["providers"] = fingerprints;
  manifest["created_at"] = iso8601_now();
  std::ofstream out(path, std::ios::trunc);
  out << manifest.dump(2) << '\n';
}

ScoringSummary run_scoring(const fs::path& run_dir, const std::vector<Prompt>& prompts,
                           const ProviderSet& providers, const ScoringConfig& config,
                           std::uint64_t seed) {
  if (prompts.empty()) throw InvalidInput("no prompts to score");
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (!fs::is_directory(run_dir)) throw Error("cannot create run dir " + run_dir.string());

  // Resume bookkeeping: anything already scored is skipped; failed prompts
  // stay failed across runs unless retry_failed.
  std::set<std::string> done;
  if (fs::exists(run_dir / "responses.jsonl")) {
    for (const auto& rec : jsonl::load(run_dir / "responses.jsonl"))
      done.insert(rec.at("prompt_id").get<std::string>());
  }
  std::set<std::string> failed_before;
  if (fs::exists(run_dir / "errors.jsonl")) {
    for (const auto& rec : jsonl::load(run_dir / "errors.jsonl"))
      failed_before.insert(rec.at("prompt_id").get<std::string>());
  }

  ScoringSummary summary;
  summary.prompts_total = prompts.size();

  std::vector<const Prompt*> todo;
  for (const auto& p : prompts) {
    if (done.count(p.id)) {
      ++summary.already_scored;
    } else if (!config.retry_failed && failed_before.count(p.id)) {
      ++summary.skipped_failed;
    } else {
      todo.push_back(&p);
    }
  }

  // prompts.jsonl records the current input set.
  {
    std::vector<ojson> recs;
    recs.reserve(prompts.size());
    for (const auto& p : prompts) {
      ojson rec;
      rec["id"] = p.id;
      rec["text"] = p.text;
      recs.push_back(std::move(rec));
    }
    jsonl::write_all(run_dir / "prompts.jsonl", recs);
  }

  std::vector<PromptOutcome> outcomes(todo.size());
  const int workers = std::max(1, config.workers);

  // Outcomes land in per-prompt slots, so the file append below is in prompt
  // order regardless of which worker finished first. Exceptions must not
  // escape the parallel region.
#pragma omp parallel for schedule(dynamic) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(todo.size()); ++i) {
    PromptOutcome& outcome = outcomes[i];
    outcome.attempted = true;
    const Prompt& p = *todo[i];
    try {
      outcome.records =
          score_prompt(p, config.n_responses, config.temperature, providers,
                       prompt_seed_for(seed, p.id));
      outcome.ok = true;
    } catch (const GenerationIncomplete& e) {
      outcome.error_kind = "generation-incomplete";
      outcome.error_message = e.what();
    } catch (const ProviderProtocolError& e) {
      outcome.error_kind = "provider-protocol-error";
      outcome.error_message = e.what();
    } catch (const ProviderUnavailable& e) {
      outcome.error_kind = "provider-unavailable";
      outcome.error_message = e.what();
    } catch (const std::exception& e) {
      outcome.error_kind = "invalid-input";
      outcome.error_message = e.what();
    }
  }

  std::vector<ojson> new_records;
  std::vector<ojson> new_errors;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const auto& outcome = outcomes[i];
    if (outcome.ok) {
      ++summary.scored;
      for (const auto& r : outcome.records) new_records.push_back(to_record(r));
    } else {
      ++summary.failed;
      ojson rec;
      rec["prompt_id"] = todo[i]->id;
      rec["kind"] = outcome.error_kind;
      rec["message"] = outcome.error_message;
      new_errors.push_back(std::move(rec));
    }
  }
  summary.new_records = new_records.size();
  jsonl::append_all(run_dir / "responses.jsonl", new_records);
  if (!new_errors.empty()) jsonl::append_all(run_dir / "errors.jsonl", new_errors);
  return summary;
}

}  // namespace udasa
