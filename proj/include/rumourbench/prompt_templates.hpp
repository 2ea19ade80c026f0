#pragma once

// Canonical prompt templates, one per (scheme, shot kind). Placeholders:
//   {tweet_text}  - target source tweet (veracity schemes)
//   {reply_text}  - target reply (stance schemes)
//   {source_text} - source tweet a reply refers to (stance schemes)
//   {examples}    - in-context example blocks (one-/few-shot only)
// PromptCatalog::save() materializes these as template files; load() reads
// an edited set back, so the catalog on disk is the override point.

namespace rumourbench::prompts::templates {

inline constexpr const char* kVeracityHeader = "###Rumour Veracity Prediction###\n###Instructions###\n";

inline constexpr const char* kBinaryZero =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

inline constexpr const char* kBinaryOne =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below is an example of a tweet and its corresponding category prediction to learn from it:
{examples})";

inline constexpr const char* kBinaryFew =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below are examples of tweets and their corresponding category predictions to learn from them:
{examples})";

inline constexpr const char* kTernaryZero =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false, unverified].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

inline constexpr const char* kTernaryOne =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false, unverified].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below is an example of a tweet and its corresponding category prediction to learn from it:
{examples})";

inline constexpr const char* kTernaryFew =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [true, false, unverified].
Below is a description of each class:
true: if the tweet is verified to be true and factual from reliable crowdsourced data sources, even beyond the tweet text.
false: if the tweet is verified to be a false rumour or a misinformation, from any possible data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below are examples of tweets and their corresponding category predictions to learn from them:
{examples})";

inline constexpr const char* kTwoStepStage1Zero =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [verified, unverified].
Below is a description of each class:
verified: if the tweet can be confirmed to be true or false from data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

inline constexpr const char* kTwoStepStage1One =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [verified, unverified].
Below is a description of each class:
verified: if the tweet can be confirmed to be true or false from data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below is an example of a tweet and its corresponding category prediction to learn from it:
{examples})";

inline constexpr const char* kTwoStepStage1Few =
    R"(###Rumour Veracity Prediction###
###Instructions###
Categorise the following tweet text between quotations "{tweet_text}" to one category from [verified, unverified].
Below is a description of each class:
verified: if the tweet can be confirmed to be true or false from data sources.
unverified: if the tweet cannot be verified from data sources.
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.
Below are examples of tweets and their corresponding category predictions to learn from them:
{examples})";

// Stage 2 runs over tweets stage 1 judged verified; the classification
// itself is the binary scheme.
inline constexpr const char* kTwoStepStage2Zero = kBinaryZero;
inline constexpr const char* kTwoStepStage2One = kBinaryOne;
inline constexpr const char* kTwoStepStage2Few = kBinaryFew;

inline constexpr const char* kStance3Zero =
    R"(###Rumour SDQC Stance Classification has the following stance categories: ###
support: the author of the response supports the veracity of the rumour represented in the source tweet.
deny: the author of the response denies the veracity of the rumour represented in the source tweet.
query: the author of the response asks for additional evidence in relation to the veracity of the rumour.

###Instructions###
Categorise the following tweet reply "{reply_text}"
to one stance category based on the following source tweet "{source_text}".
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

inline constexpr const char* kStance4Zero =
    R"(###Rumour SDQC Stance Classification has the following stance categories: ###
support: the author of the response supports the veracity of the rumour represented in the source tweet.
deny: the author of the response denies the veracity of the rumour represented in the source tweet.
query: the author of the response asks for additional evidence in relation to the veracity of the rumour.
comment: the author of the response makes their own comment without a clear contribution to assessing the veracity of the rumour.

###Instructions###
Categorise the following tweet reply "{reply_text}"
to one stance category based on the following source tweet "{source_text}".
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

inline constexpr const char* kStanceMultiZero =
    R"(###Rumour SDQC Stance Classification has the following stance categories: ###
support: the author of the response supports the veracity of the rumour represented in the source tweet.
deny: the author of the response denies the veracity of the rumour represented in the source tweet.
query: the author of the response asks for additional evidence in relation to the veracity of the rumour.
comment: the author of the response makes their own comment without a clear contribution to assessing the veracity of the rumour.

###Instructions###
Categorise the following tweet reply "{reply_text}"
to one or more stance categories based on the following source tweet "{source_text}".
Give a confidence score between 0 and 1 for the predicted value.
And justify the prediction choice.)";

} // namespace rumourbench::prompts::templates
