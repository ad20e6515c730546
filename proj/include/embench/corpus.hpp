#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embench/vocabulary.hpp"

namespace embench {

inline constexpr int kNumSexes = 2;
inline constexpr int kNumRegions = 10;
inline constexpr int kMinBirthYear = 1888;
inline constexpr int kMaxBirthYear = 1998;
inline constexpr int kNumBirthYears = kMaxBirthYear - kMinBirthYear + 1;  // 111
inline constexpr int kDefaultMinVisits = 5;

/// Calendar year of every patient's first record. Ages are
/// (kRecordAnchorYear - birth_year) plus the visit's day offset.
inline constexpr int kRecordAnchorYear = 2000;

struct Visit {
  int date_offset_days = 0;
  std::vector<int> codes;  // vocabulary indices, no duplicates

  bool operator==(const Visit&) const = default;
};

struct PatientRecord {
  std::string id;
  int sex = 0;
  int region = 0;
  int birth_year = kMinBirthYear;
  std::vector<Visit> visits;

  bool operator==(const PatientRecord&) const = default;
};

/// Age in days at a visit under the fixed record anchor.
int age_in_days(const PatientRecord& p, int date_offset_days);
/// Age in whole years at a visit.
int age_in_years(const PatientRecord& p, int date_offset_days);

struct Corpus {
  ConceptVocabulary vocabulary;
  std::vector<PatientRecord> patients;

  bool operator==(const Corpus&) const = default;

  /// Checks every record and code index invariant; throws Error naming the
  /// first offending patient.
  void validate(int min_visits = kDefaultMinVisits) const;

  /// 64-bit content hash of the canonical serialized form.
  std::uint64_t fingerprint() const;

  /// Keeps the patients at `indices` (in the given order) and rebuilds the
  /// vocabulary from the codes they use.
  Corpus subset(const std::vector<std::size_t>& indices) const;
};

struct LoadOptions {
  int min_visits = kDefaultMinVisits;
};

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});
Corpus parse_corpus(std::istream& in, const LoadOptions& options = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

}  // namespace embench
