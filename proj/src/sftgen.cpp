#include "postreason/sftgen.hpp"

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

ChatTemplateSpec ChatTemplateSpec::from_templates(const PromptTemplateSet& set) {
  ChatTemplateSpec spec;
  spec.system_text = set.system_for(StrategyKind::PostReason);
  spec.user_wrapper = "{question}\n" + set.suffix_for(StrategyKind::PostReason);
  return spec;
}

ChatTemplateSpec ChatTemplateSpec::from_json(const json& j) {
  ChatTemplateSpec spec;
  spec.system_text = j.value("system_text", spec.system_text);
  spec.user_wrapper = j.value("user_wrapper", spec.user_wrapper);
  spec.separator = j.value("separator", spec.separator);
  spec.assistant_prefix = j.value("assistant_prefix", spec.assistant_prefix);
  spec.answer_format = j.value("answer_format", spec.answer_format);
  spec.explanation_prefix = j.value("explanation_prefix", spec.explanation_prefix);
  if (spec.user_wrapper.find("{question}") == std::string::npos) {
    throw ConfigError("chat template user_wrapper lacks {question}");
  }
  if (spec.answer_format.find("{answer}") == std::string::npos) {
    throw ConfigError("chat template answer_format lacks {answer}");
  }
  return spec;
}

ordered_json ChatTemplateSpec::to_json() const {
  ordered_json j;
  j["system_text"] = system_text;
  j["user_wrapper"] = user_wrapper;
  j["separator"] = separator;
  j["assistant_prefix"] = assistant_prefix;
  j["answer_format"] = answer_format;
  j["explanation_prefix"] = explanation_prefix;
  return j;
}

std::string MaskedSftRecord::full_text() const {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

MaskedSftRecord build_record(const TaskInstance& instance, const std::string& gold,
                             const Trace& trace, const ChatTemplateSpec& spec) {
  if (text::trim(trace.text).empty()) {
    throw ValidationError(instance.id + ": empty trace");
  }
  const std::string answer_statement = "Answer: " + gold;
  if (trace.text.find(answer_statement) != std::string::npos) {
    throw ValidationError(instance.id + ": trace states '" + answer_statement + "'");
  }

  std::string prompt;
  if (!spec.system_text.empty()) prompt = spec.system_text + spec.separator;
  prompt += text::replace_all(spec.user_wrapper, "{question}", format_question(instance));
  prompt += spec.separator;

  MaskedSftRecord r;
  r.id = instance.id;
  r.segments.push_back({std::move(prompt), false});
  r.segments.push_back({spec.assistant_prefix +
                            text::replace_all(spec.answer_format, "{answer}", gold) +
                            spec.explanation_prefix,
                        false});
  r.segments.push_back({trace.text, true});
  r.meta = {instance.benchmark, std::string(to_string(trace.mode)), trace.generator_model};
  return r;
}

std::string record_violation(const MaskedSftRecord& record, const std::string& gold) {
  bool any_trainable = false;
  bool answer_masked = false;
  const std::string answer_statement = "Answer: " + gold;
  for (const auto& s : record.segments) {
    if (s.trainable) {
      any_trainable = true;
      if (s.text.find(answer_statement) != std::string::npos) {
        return "trainable segment contains '" + answer_statement + "'";
      }
    } else if (s.text.find(answer_statement) != std::string::npos) {
      answer_masked = true;
    }
  }
  if (!any_trainable) return "no trainable segment";
  if (!answer_masked) return "no masked segment states '" + answer_statement + "'";
  return {};
}

ordered_json to_json(const MaskedSftRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  ordered_json segs = ordered_json::array();
  for (const auto& s : record.segments) {
    ordered_json sj;
    sj["text"] = s.text;
    sj["trainable"] = s.trainable;
    segs.push_back(std::move(sj));
  }
  j["segments"] = std::move(segs);
  ordered_json meta;
  meta["benchmark"] = record.meta.benchmark;
  meta["mode"] = record.meta.mode;
  meta["generator_model"] = record.meta.generator_model;
  j["meta"] = std::move(meta);
  return j;
}

MaskedSftRecord sft_record_from_json(const json& j) {
  MaskedSftRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    for (const auto& s : j.at("segments")) {
      r.segments.push_back({s.at("text").get<std::string>(), s.at("trainable").get<bool>()});
    }
    const auto& meta = j.value("meta", json::object());
    r.meta.benchmark = meta.value("benchmark", std::string{});
    r.meta.mode = meta.value("mode", std::string{});
    r.meta.generator_model = meta.value("generator_model", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("masked record: ") + e.what());
  }
  return r;
}

std::size_t emit_corpus(std::span<const MaskedSftRecord> records, const std::string& out_path) {
  JsonlWriter writer(out_path, JsonlWriter::Mode::Truncate);
  for (const auto& r : records) writer.write(to_json(r));
  return writer.written();
}

}  // namespace postreason
