#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace graphrank::prompts {

/// One named, versioned prompt template with {{slot}} placeholders.
struct Template {
    std::string name;
    std::string version;
    std::string body;

    std::string tag() const { return name + "." + version; }
};

/// Registry of prompt templates. Ships with built-in defaults; a directory of
/// `<name>.tmpl` files (first line `version: vN`, rest body) overrides them so
/// prompt wording can evolve without a rebuild. Rendered output is a pure
/// function of (template, slots), which keeps request fingerprints replayable.
class PromptLibrary {
  public:
    static PromptLibrary builtin();

    void load_directory(const std::filesystem::path& dir);

    const Template& get(const std::string& name) const;
    bool has(const std::string& name) const;

    /// Substitutes every {{slot}}; throws Error if a placeholder has no value
    /// or a provided slot is unknown to the template.
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& slots) const;

    /// "name.version" tag recorded in payloads and rank results.
    std::string version_tag(const std::string& name) const { return get(name).tag(); }

  private:
    std::map<std::string, Template> templates_;
};

}  // namespace graphrank::prompts
