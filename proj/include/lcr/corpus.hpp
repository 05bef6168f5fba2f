#pragma once

// Case records, JSONL ingestion, deterministic synthetic cases, and
// charge-stratified splits.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcr/legal_chain.hpp"

namespace lcr {

struct CaseRecord {
  std::string case_id;
  std::string fact;
  std::string charge;
  std::string opinion;
  int sentence_months = 0;
  // Byte offsets [begin, end) into `opinion` covering the sentencing clause.
  std::pair<std::size_t, std::size_t> sentencing_span{0, 0};
  std::string defendant;

  bool operator==(const CaseRecord&) const = default;
};

// Empty when the record satisfies its invariants.
std::vector<std::string> record_defects(const CaseRecord& rec);

struct LoadIssue {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<CaseRecord> records;
  std::vector<LoadIssue> skipped;
};

enum class LoadMode { FailFast, Lenient };

CaseRecord parse_case_record(std::string_view json_line);
std::string serialize_case_record(const CaseRecord& rec);

LoadResult parse_jsonl(std::string_view text, LoadMode mode = LoadMode::FailFast);
LoadResult load_jsonl(const std::filesystem::path& path, LoadMode mode = LoadMode::FailFast);
std::string serialize_jsonl(const std::vector<CaseRecord>& records);
void save_jsonl(const std::vector<CaseRecord>& records, const std::filesystem::path& path);

struct SynthesisSpec {
  int cases_per_charge = 20;
  std::vector<std::string> charges;  // empty: every charge in the library
  int distractors = 1;               // unrelated sentences appended to each fact
};

// One case per draw: a chain of the charge is instantiated, the fact realizes
// its premise and situation, and the opinion carries a term sampled uniformly
// from the chain's range.
std::vector<CaseRecord> synthesize_corpus(std::uint64_t seed, const SynthesisSpec& spec,
                                          const ChainLibrary& library);

struct CorpusSplit {
  std::vector<CaseRecord> train;
  std::vector<CaseRecord> test;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

// Stratified by charge; within each charge round(ratio * n) cases go to train.
CorpusSplit split_corpus(const std::vector<CaseRecord>& corpus, double ratio, std::uint64_t seed);

std::string charge_display_name(std::string_view charge);

}  // namespace lcr
