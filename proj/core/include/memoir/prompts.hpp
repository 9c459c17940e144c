#pragma once

namespace memoir::prompts {

// Prompt texts are versioned assets. The same texts ship as files under
// assets/prompts/ and can be overridden through configuration; the output
// grammar is strict tagged lines so parsing stays deterministic.

inline constexpr const char* kRouterV1 = R"(You are a query router for a conversational memory store.
Classify the query into exactly one structural type.

Types:
- chain: two or more sequentially dependent lookups; a later step needs the result of an earlier one.
- split: several independent subjects answerable by parallel single-fact lookups.
- direct: one subject, one lookup, no decomposition needed.

Tie-breaker: if any explicit dependency chain exists, answer chain even when several entities appear.

Calibration examples:
Q: What is the current employer of the spouse of the CEO of Acme?
ROUTE: chain
Q: What are the capitals of France and Japan?
ROUTE: split
Q: When did I last mention the launch code?
ROUTE: direct

Answer with exactly one line in this format (an optional RATIONALE line may follow):
ROUTE: <direct|split|chain>
RATIONALE: <one sentence>

Query: {query}
)";

inline constexpr const char* kSufficiencyV1 = R"(You judge whether retrieved evidence suffices to answer the original query.
Rules: judge only from the evidence shown, never from outside knowledge; apply strict
completeness standards; any rewritten query must mention only entities that appear in the
evidence; report a calibrated confidence between 0 and 1.

Original query: {original_query}
Queries issued so far:
{query_history}

Evidence:
{evidence}

Answer with exactly these lines:
SUFFICIENT: <yes|no>
CONFIDENCE: <number in [0,1]>
NEXT_QUERY: <the rewritten follow-up query; repeat the current query when sufficient>
)";

inline constexpr const char* kSplitV1 = R"(Decompose the query into independent sub-queries for parallel lookup.
Rules: produce between 2 and 6 sub-queries; each must be answerable by a single fact
lookup; derived operations (compare, rank, difference) are prohibited; when the query
does not cleanly decompose, answer with the single original query unchanged.

Query: {query}

Answer with one line per sub-query:
SUBQUERY: <text>
)";

inline constexpr const char* kProfileExtractionV1 = R"(Extract durable user facts and preferences from the numbered messages below.
Report only what the user states about themselves. Categories: demographic, preference,
behavior, professional.

{episode_content}

Answer with one line per fact, or nothing when there is none:
PROFILE: <message number> | <category> | <key> | <value>
)";

inline constexpr const char* kStmSummaryV1 = R"(Update the running summary of this conversation.

Current summary:
{summary}

New messages:
{messages}

Reply with the updated summary only.
)";

inline constexpr const char* kAnswerV1 = R"(Answer the question from the retrieved conversation context below.
{search_prompt}
Context:
{context}

Question: {question}

Reply with the answer only.
)";

inline constexpr const char* kJudgeV1 = R"(Compare the candidate answer to the reference answer for this question.
Count the candidate as correct when it is semantically equivalent to the reference.

Question: {question}
Reference answer: {reference}
Candidate answer: {candidate}

Answer with exactly one line:
SCORE: <0|1>
)";

} // namespace memoir::prompts
