#pragma once

#include <string>
#include <string_view>

namespace urbancast {

// A forecasting task: a short name plus the phrase placed in the prompt.
struct TaskSpec {
    std::string name;
    std::string task_text;
};

// Fills the task-aware retrieval prompt with the task phrase and the target
// region's description. Throws InputError when either is empty.
std::string build_prompt(std::string_view task_text, std::string_view description);
std::string build_prompt(const TaskSpec& task, std::string_view description);

// Recovers the task phrase from a prompt produced by build_prompt; empty if
// the text does not follow the template.
std::string task_text_from_prompt(std::string_view prompt);

}  // namespace urbancast
