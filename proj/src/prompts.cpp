#include "errtax/prompts.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "errtax/errors.hpp"

namespace errtax::prompts {

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
    std::set<std::string> names;
    std::size_t pos = 0;
    while ((pos = text_.find("{{", pos)) != std::string::npos) {
        std::size_t end = text_.find("}}", pos + 2);
        if (end == std::string::npos) throw Error("unterminated placeholder in prompt template");
        std::string name = text_.substr(pos + 2, end - pos - 2);
        if (name.empty()) throw Error("empty placeholder in prompt template");
        if (names.insert(name).second) placeholders_.push_back(name);
        pos = end + 2;
    }
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open prompt template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return PromptTemplate(buf.str());
}

std::string PromptTemplate::fill(const std::map<std::string, std::string>& values) const {
    for (const auto& name : placeholders_) {
        if (!values.count(name)) {
            throw Error("prompt template placeholder \"" + name + "\" was not supplied");
        }
    }
    for (const auto& [key, _] : values) {
        if (std::find(placeholders_.begin(), placeholders_.end(), key) == placeholders_.end()) {
            throw Error("prompt template has no placeholder \"" + key + "\"");
        }
    }
    std::string out;
    out.reserve(text_.size());
    std::size_t pos = 0;
    while (pos < text_.size()) {
        std::size_t open = text_.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text_, pos, std::string::npos);
            break;
        }
        out.append(text_, pos, open - pos);
        std::size_t close = text_.find("}}", open + 2);
        std::string name = text_.substr(open + 2, close - open - 2);
        out.append(values.at(name));
        pos = close + 2;
    }
    return out;
}

std::filesystem::path default_prompt_dir() {
    // Walk up from the current directory looking for the assets tree, so the
    // CLI works from a build directory as well as the repo root.
    std::filesystem::path dir = std::filesystem::current_path();
    for (int depth = 0; depth < 6; ++depth) {
        std::filesystem::path candidate = dir / "assets" / "prompts";
        if (std::filesystem::is_directory(candidate)) return candidate;
        if (!dir.has_parent_path() || dir.parent_path() == dir) break;
        dir = dir.parent_path();
    }
    return std::filesystem::path("assets") / "prompts";
}

PromptTemplate load_asset(const std::filesystem::path& prompt_dir, std::string_view asset) {
    return PromptTemplate::load(prompt_dir / std::filesystem::path(std::string(asset)));
}

std::string cot_prompt(std::string_view question) {
    std::string out(question);
    out += "\n";
    out += kCotInstruction;
    return out;
}

}  // namespace errtax::prompts
