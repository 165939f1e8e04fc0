#include "postreason/prompts.hpp"

namespace postreason {

namespace {

using S = StrategyKind;

// Registers `text` for a strategy and its thinking twin, which share wording.
void both(std::map<S, std::string>& m, S base, const std::string& text) {
  m[base] = text;
  if (base == S::Direct) m[S::ThinkingDirect] = text;
  if (base == S::PostReason) m[S::ThinkingPost] = text;
}

PromptTemplateSet gsm8k() {
  PromptTemplateSet t;
  t.benchmark = "gsm8k";
  both(t.system_prompts, S::Direct,
       "You are a direct math expert. Output ONLY the final numeric answer. Do not provide any "
       "reasoning or explanation.");
  both(t.system_prompts, S::PostReason,
       "You are a post-reasoning math expert. State the final numeric answer first, then "
       "explain your reasoning.");
  t.system_prompts[S::PostSummary] =
      "You are a post-reasoning math expert. State the final numeric answer first, then briefly "
      "summarize the problem and your answer in a single sentence.";
  t.system_prompts[S::PostConfidence] =
      "You are a post-reasoning math expert. State the final numeric answer first, then state "
      "your confidence level (0-100%) in this answer and briefly explain why.";

  both(t.suffixes, S::Direct,
       "Answer immediately without any explanation or reasoning. Output format: 'Answer: "
       "[Answer].'");
  both(t.suffixes, S::PostReason,
       "State the final answer immediately as 'Answer: [Answer].' THEN, explain your reasoning "
       "in 'Explanation: '.");
  t.suffixes[S::PostSummary] =
      "State the final answer immediately, then briefly summarize the problem and your answer "
      "in a single sentence. Output format: 'Answer: [Answer]. Summary: [summary]'";
  t.suffixes[S::PostConfidence] =
      "State the final answer immediately, then state your confidence level (0-100%) in this "
      "answer and briefly explain why. Output format: 'Answer: [Answer]. Confidence: [X%]. "
      "Explanation: [reasoning]'";
  return t;
}

// AMC 8/10/12 and HMMT Feb/Nov share one set of strings.
PromptTemplateSet easy2hard(const std::string& name) {
  PromptTemplateSet t;
  t.benchmark = name;
  both(t.system_prompts, S::Direct,
       "You are a direct math expert. Output ONLY the final integer answer. Do not provide any "
       "reasoning or explanation.");
  both(t.system_prompts, S::PostReason,
       "You are a post-reasoning math expert. State the final integer answer first, then "
       "explain your reasoning.");
  both(t.suffixes, S::Direct,
       "Answer immediately without any explanation or reasoning. Output ONLY the final integer "
       "answer.");
  both(t.suffixes, S::PostReason,
       "State the final integer answer immediately as 'Answer: [Number].' THEN, explain your "
       "reasoning in 'Explanation: '.");
  return t;
}

PromptTemplateSet gpqa() {
  const std::string persona =
      "You are an expert in graduate-level science (biology, physics, and chemistry). ";
  PromptTemplateSet t;
  t.benchmark = "gpqa";
  both(t.system_prompts, S::Direct,
       persona +
           "You must output ONLY the final answer. Do not provide any reasoning, or explanation.");
  both(t.system_prompts, S::PostReason,
       persona + "State the answer letter first, then explain your scientific reasoning.");
  t.system_prompts[S::PostSummary] =
      persona +
      "State the answer letter first, then briefly summarize the problem and your answer in a "
      "single sentence.";
  t.system_prompts[S::PostConfidence] =
      persona +
      "State the answer letter first, then state your confidence level (0-100%) in this answer "
      "and briefly explain why.";

  both(t.suffixes, S::Direct,
       "Which option is correct? Provide only the letter as your response without any "
       "explanation. Output format 'Answer: [Letter].'");
  both(t.suffixes, S::PostReason,
       "Which option is correct? Think hard without outputting any explanation. State the final "
       "answer immediately and justify your answer. Output format: 'Answer: [Letter]. "
       "Explanation: [reasoning]'");
  t.suffixes[S::PostSummary] =
      "Which option is correct? State the final answer immediately, then briefly summarize the "
      "question and your answer in a single sentence. Output format: 'Answer: [Letter]. "
      "Summary: [summary]'";
  t.suffixes[S::PostConfidence] =
      "Which option is correct? State the final answer immediately, then state your confidence "
      "level (0-100%) in this answer and briefly explain why. Output format: 'Answer: [Letter]. "
      "Confidence: [X%]. Explanation: [reasoning]'";
  return t;
}

PromptTemplateSet mmlu_pro() {
  const std::string persona =
      "You are an expert academic AI answering complex, graduate-level multiple-choice "
      "questions across diverse domains. You must state the final option letter (A through J) "
      "first, ";
  const std::string question = "Which of the given choices A through J is the correct answer?\n";
  PromptTemplateSet t;
  t.benchmark = "mmlu_pro";
  both(t.system_prompts, S::Direct,
       "You are an expert academic AI. You must answer complex, graduate-level multiple-choice "
       "questions across diverse domains. Output ONLY the letter of the correct option (A "
       "through J). Do not provide any explanation, reasoning, or caveats.");
  both(t.system_prompts, S::PostReason,
       persona + "and then provide a rigorous scientific or logical justification for your "
                 "choice.");
  t.system_prompts[S::PostSummary] =
      persona + "then briefly summarize the problem and your answer in a single sentence.";
  t.system_prompts[S::PostConfidence] =
      persona +
      "then state your confidence level (0-100%) in this answer and briefly explain why.";

  both(t.suffixes, S::Direct,
       question + "Output ONLY the correct letter in this exact format: 'Answer: [Letter]'.");
  both(t.suffixes, S::PostReason,
       question +
           "State the final answer immediately in this exact format: 'Answer: [Letter]'. THEN, "
           "provide your rigorous explanation starting with 'Explanation: '.");
  t.suffixes[S::PostSummary] =
      question +
      "State the final answer immediately, then briefly summarize the question and your "
      "selected answer in a single sentence. Output format: 'Answer: [Letter]. Summary: "
      "[summary]'";
  t.suffixes[S::PostConfidence] =
      question +
      "State the final answer immediately, then state your confidence level (0-100%) in this "
      "answer and briefly explain why. Output format: 'Answer: [Letter]. Confidence: [X%]. "
      "Explanation: [reasoning]'";
  return t;
}

PromptTemplateSet bbh() {
  PromptTemplateSet t;
  t.benchmark = "bbh";
  both(t.system_prompts, S::Direct,
       "You are a Direct-Answer engine. Output ONLY the final answer. Do not provide any "
       "explanation or reasoning.");
  both(t.system_prompts, S::PostReason,
       "You are a Post-Reasoning engine. State the final answer first, then explain your "
       "logic.");
  both(t.suffixes, S::Direct, "Answer immediately. Output format: 'Answer: [Answer].'");
  both(t.suffixes, S::PostReason,
       "State the final answer immediately as 'Answer: [Answer].' THEN, provide your reasoning "
       "in 'Explanation: '.");
  return t;
}

}  // namespace

TemplateLibrary TemplateLibrary::builtin() {
  TemplateLibrary lib;
  lib.add(gsm8k());
  lib.add(easy2hard("amc"));
  lib.add(easy2hard("hmmt"));
  lib.add(gpqa());
  lib.add(mmlu_pro());
  lib.add(bbh());
  return lib;
}

}  // namespace postreason
