#pragma once

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "sot3d/metrics.hpp"

namespace sot3d::bench {

struct ComparisonRow {
  std::string label;
  double mao = 0.0;
  double msr50 = 0.0;
  double msr75 = 0.0;
};

inline ComparisonRow comparison_row(const std::string& label, const MetricsReport& r) {
  return ComparisonRow{label, r.mao, r.msr50, r.msr75};
}

inline nlohmann::json comparison_to_json(const std::vector<ComparisonRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const ComparisonRow& r : rows) {
    j.push_back({{"tracker", r.label}, {"mAO", r.mao}, {"mSR50", r.msr50}, {"mSR75", r.msr75}});
  }
  return j;
}

inline std::string comparison_to_text(const std::vector<ComparisonRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(20) << "tracker" << std::right << std::setw(10) << "mAO"
     << std::setw(10) << "mSR50" << std::setw(10) << "mSR75" << "\n";
  for (const ComparisonRow& r : rows) {
    os << std::left << std::setw(20) << r.label << std::right << std::setw(10) << r.mao
       << std::setw(10) << r.msr50 << std::setw(10) << r.msr75 << "\n";
  }
  return os.str();
}

struct AblationRow {
  std::string axis;
  int value = 0;
  double mao = 0.0;
  double msr50 = 0.0;
  double msr75 = 0.0;
};

inline nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const AblationRow& r : rows) {
    j.push_back({{"axis", r.axis},
                 {"value", r.value},
                 {"mAO", r.mao},
                 {"mSR50", r.msr50},
                 {"mSR75", r.msr75}});
  }
  return j;
}

inline std::string ablation_to_text(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(14) << "axis" << std::right << std::setw(7) << "value"
     << std::setw(10) << "mAO" << std::setw(10) << "mSR50" << std::setw(10) << "mSR75" << "\n";
  for (const AblationRow& r : rows) {
    os << std::left << std::setw(14) << r.axis << std::right << std::setw(7) << r.value
       << std::setw(10) << r.mao << std::setw(10) << r.msr50 << std::setw(10) << r.msr75 << "\n";
  }
  return os.str();
}

}  // namespace sot3d::bench
