#pragma once

#include "fapisim/attacker.hpp"
#include "fapisim/monitors.hpp"
#include "fapisim/scenario.hpp"

namespace fapisim {

// Named attacker recipes for the scripted attack scenarios.
std::unique_ptr<Recipe> makeRecipeByName(const std::string& name);
const std::vector<std::string>& attackNames();

// Chooser that lets the attacker's recipe script every labelled choice in
// the configuration, its own and the honest processes' alike.
class RecipeChooser : public Chooser {
 public:
  explicit RecipeChooser(AttackerProc* att) : att_(att) {}
  size_t pick(const std::string& label, size_t n) override {
    return att_ && att_->recipe ? att_->recipe->pickChoice(label, n) : 0;
  }

 private:
  AttackerProc* att_;
};

struct AttackOutcome {
  Trace trace;
  MonitorContext mc;
  std::vector<MonitorVerdict> verdicts;
  bool violated = false;
  bool expectedViolation = false;  // with this countermeasure setting
  std::string expectedProperty;
  std::string scenarioFile;
};

// Runs the named attack scenario to quiescence. With the countermeasure
// disabled the expected property is violated; enabled, the run stays clean.
AttackOutcome runAttack(const std::string& name, bool fixEnabled,
                        const std::string& scenarioDir);

}  // namespace fapisim
