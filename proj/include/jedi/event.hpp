#pragma once

#include "jedi/types.hpp"

#include <limits>
#include <optional>
#include <string>

namespace jedi {

// One teaching iteration: the shown example, the learner's answer, the truth.
struct TeachingEvent {
  std::size_t step = 0;
  std::string example_id;
  std::size_t pool_index = 0;
  Vector shown_x;
  Label learner_label = Label::Positive;
  Label true_label = Label::Positive;
  double objective_value = std::numeric_limits<double>::quiet_NaN();  // NaN for random picks

  bool correct() const { return learner_label == true_label; }
};

// Builds a TeachingEvent in protocol order: the learner's label must be
// committed before the true label can be revealed.
class PendingEvent {
 public:
  PendingEvent(std::size_t step, const Example& example, std::size_t pool_index, double objective_value);

  void commit_learner_label(Label label);
  bool label_committed() const { return committed_.has_value(); }
  TeachingEvent reveal(Label true_label) &&;

  const TeachingEvent& draft() const { return event_; }

 private:
  TeachingEvent event_;
  std::optional<Label> committed_;
};

}  // namespace jedi
