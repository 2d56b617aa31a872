#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "syllogic/eval.hpp"

namespace syllogic {

struct CellResult {
  Pairing pairing;
  std::uint64_t n = 0;
  std::uint64_t correct = 0;
  std::uint64_t invalid = 0;  // no valid label parsed; always scored incorrect
  double accuracy = 0.0;      // correct / n

  bool operator==(const CellResult&) const = default;
};

struct AccuracyMatrix {
  std::string model;
  std::vector<std::string> languages;
  std::vector<CellResult> cells;  // row-major: premise language row, hypothesis column

  const CellResult& cell(const std::string& premise_language,
                         const std::string& hypothesis_language) const;
};

// Accuracy-percent intervals, half-open below; the last is closed above.
enum class Bucket {
  Below30,
  From30to35,
  From35to40,
  From40to45,
  From45to50,
  From50to55,
  From55to60,
  AtLeast60,
};

std::string to_string(Bucket b);
const std::array<Bucket, 8>& all_buckets();

// Maps an accuracy percentage in [0, 100] to its interval.
Bucket bucket(double accuracy_percent);

struct QualityRow {
  std::string language;
  std::uint64_t sample_size = 0;
  double mean_cosine = 0.0;
};

// Aggregates records of one pairing. Invalid answers count against
// accuracy and are reported in their own column.
CellResult score(const std::vector<PredictionRecord>& records);

// Assembles cells into a complete matrix over the ordered language list.
// A missing or duplicated pairing is an error naming it.
AccuracyMatrix matrix(const std::vector<CellResult>& cells,
                      const std::vector<std::string>& languages,
                      const std::string& model);

double cosine(const std::vector<double>& u, const std::vector<double>& v);

// Mean pairwise cosine between aligned source and translated texts,
// embedded through the gateway.
QualityRow translation_quality(const std::vector<std::string>& source_texts,
                               const std::vector<std::string>& translated_texts,
                               const std::string& language, const Gateway& gateway);

enum class ReportFormat { Csv, Json, Markdown };

std::string to_string(ReportFormat f);
ReportFormat report_format_from_string(std::string_view s);
std::string report_extension(ReportFormat f);

// Renderers are pure and byte-deterministic. CSV and JSON carry full
// precision; markdown rounds to one decimal and annotates every cell with
// its bucket, followed by a monolingual table and the full 8-bucket legend.
std::string render_matrix(const AccuracyMatrix& m, ReportFormat format);
std::string render_quality(const std::vector<QualityRow>& rows, ReportFormat format);

void emit(const AccuracyMatrix& m, ReportFormat format,
          const std::filesystem::path& path);
void emit(const std::vector<QualityRow>& rows, ReportFormat format,
          const std::filesystem::path& path);

}  // namespace syllogic
