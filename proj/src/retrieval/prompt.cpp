#include "urbancast/retrieval/prompt.hpp"

#include "urbancast/errors.hpp"

namespace urbancast {

namespace {

constexpr std::string_view kLead = "To predict ";
constexpr std::string_view kMiddle = " for a given target region described as follows: ";
constexpr std::string_view kTail =
    ".\n\nList the relevant urban features, buildings, land use or functions nearby the target "
    "region that may provide useful contextual information.";

}  // namespace

std::string build_prompt(std::string_view task_text, std::string_view description) {
    if (task_text.empty()) throw InputError("build_prompt: empty task text");
    if (description.empty()) throw InputError("build_prompt: empty region description");
    std::string out;
    out.reserve(kLead.size() + task_text.size() + kMiddle.size() + description.size() + kTail.size());
    out.append(kLead).append(task_text).append(kMiddle).append(description).append(kTail);
    return out;
}

std::string build_prompt(const TaskSpec& task, std::string_view description) {
    return build_prompt(task.task_text, description);
}

std::string task_text_from_prompt(std::string_view prompt) {
    if (!prompt.starts_with(kLead)) return {};
    prompt.remove_prefix(kLead.size());
    const auto pos = prompt.find(kMiddle);
    if (pos == std::string_view::npos) return {};
    return std::string(prompt.substr(0, pos));
}

}  // namespace urbancast
