#include "gazebench/prompt_texts.hpp"

namespace gazebench::prompting::texts {

const std::string_view kGfoTaskDescription =
    R"TPL(You are a vision assistant specializing in **human gaze analysis**. Your task is to analyze an input image and determine **where a person of interest is looking at**. You must output two things:

- **inout**: a float number in [0,1] estimating how likely the person's gaze target lies within the current image area.
- **gaze_point**: the (x,y) image coordinates of the person's point of attention (that is their gaze point). The origin (0,0) corresponds to the top-left corner. x increases to the right, y increases downward.

Note that you **must always provide a gaze point, even if you believe the person is looking outside the image**.

The person of interest is identified by the **bounding box coordinates** of their head in the user's input.)TPL";

const std::string_view kGfoPrBase =
    R"TPL(<Task description>

### Input/Output Format:

- **Input:** An image followed by a set of **bounding box coordinates** of the head of the person of interest.
- **Output:** Report in JSON format:
  - **inout**: the probability of looking inside the frame;
  - **gaze_point** the estimated gaze point coordinates.

**Required Output Format:**
### Gaze Point ###
```json
[
{"inout": <0.0-1.0>,"gaze_point": [x, y]}
]
```)TPL";

const std::string_view kGfoPrCotBase =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis.**

### Input/Output Format:
- **Input:** An image followed by a set of **bounding box coordinates** of the head of the person of interest.
- **Output:** Report in JSON format:
  - **inout**: the probability of looking inside the frame;
  - **gaze_point** the estimated gaze point coordinates.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Gaze Point ###
```json
[
{"inout": <0.0-1.0>, "gaze_point": [x, y]}
]
```)TPL";

const std::string_view kGfoPrCotStruct =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis**. Your entire response, including reasoning and final answer, must not exceed 1000 tokens and avoid repetition.

For instance, you can do the following:

1. Describe what is happening in the image.
2. Identify the activity or activities in which the person of interest is engaged in.
3. Determine the direction of gaze of the person of interest. Analyze the orientation of their head and eyes (if visible) to infer their gaze direction.
4. Identify and locate all plausible gaze targets (objects and/or persons) in the image that are visible to the person of interest, that is, that are within their field-of-view. Evaluate as well whether the person of interest is looking at something that is within the image area, or outside the image area.
5. Describe the spatial relationships between the person of interest and each of these plausible gaze targets.
6. Based on the scene context and information above, estimate how possible the person of interest is looking inside the frame and which plausible gaze target is the person of interest most likely looking at regardless of whether it is inside or outside the frame.
7. Using your reasoning, localize the most probable target of attention of the person of interest as a point. Use this point as the final gaze point. Provide the requested outputs (inout and gaze_point).

### Input/Output Format:
- **Input:** An image followed by a set of **bounding box coordinates** of the head of the person of interest.
- **Output:** Report in JSON format:
  - **inout**: the probability of looking inside the frame;
  - **gaze_point** the estimated gaze point coordinates.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Gaze Point ###
```json
[
{"inout": <0.0-1.0>, "gaze_point": [x, y]}
]
```)TPL";

const std::string_view kGfoPrInContext =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis.** Your entire response, including reasoning and final answer, must not exceed 1000 tokens and avoid repetition.

### Input/Output Format:
- **Input:** An image followed by a set of **bounding box coordinates** of the head of the person of interest.
- **Output:** Report in JSON format:
  - **inout**: the probability of looking inside the frame;
  - **gaze_point** the estimated gaze point coordinates.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Gaze Point ###
```json
[
{"inout": <0.0-1.0>, "gaze_point": [x, y]}
]
```

To help you understand how to do the analysis, I provide you with two examples:)TPL";

const std::string_view kGfoInContextClose =
    "Example provided. Now, analyze the following image.";

const std::string_view kSgTaskDescriptionLaeo =
    R"TPL(You are a helpful assistant specializing in **human gaze analysis**. Your task is to analyze an input image, and determine **whether the people of interest are looking at each other**.

The people of interest are identified by the **bounding box coordinates** of their heads in the user's input.)TPL";

// Escaped literals below keep significant trailing spaces safe from editor trimming.
const std::string_view kSgTaskDescriptionLah =
    "You are a helpful assistant specializing in **human gaze analysis**. Your task is to "
    "analyze an input image, and determine **whether person A is looking at person B**. \n"
    "\n"
    "The people of interest are identified by the **bounding box coordinates** of their heads "
    "in the user's input.";

const std::string_view kSgTaskDescriptionSa =
    "You are a helpful assistant specializing in **human gaze analysis**. Your task is to "
    "analyze an input image, and determine **whether the people of interest are sharing "
    "attention, i.e., looking towards the same object or person in the scene.**. \n"
    "\n"
    "The people of interest are identified by the **bounding box coordinates** of their heads "
    "in the user's input.";

const std::string_view kSgTaskPhraseLaeo = "looking at each other";
const std::string_view kSgTaskPhraseLah = "person A looking at person B";
const std::string_view kSgTaskPhraseSa = "shared attention";

const std::string_view kSgPrBase =
    R"TPL(<Task description>

### Input/Output Format:
- **Input:** An image followed by a pair of **bounding box coordinates** of the heads of the people of interest.
- **Output:** Report in JSON format:
  - **label** the probability of <task>.

**Required Output Format:**
### Social Gaze Label ###
```json
[
{"label": <0.0-1.0>}}
]
```)TPL";

const std::string_view kSgPrCotBase =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis**.

### Input/Output Format:
- **Input:** An image followed by a pair of **bounding box coordinates** of the heads of the people of interest.
- **Output:** Report in JSON format:
  - **label** the probability of <task>.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Social Gaze Label ###
```json
[
)TPL"
    "{\"label\": <0.0-1.0>} \n"
    "]\n"
    "```";

const std::string_view kSgPrCotStruct =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis**. For instance, you can do the following:

1. Describe what is happening in the image.
2. Identify the activity or activities in which the people of interest are engaged in.
3. Determine the direction of gaze of the people of interest. Analyze the orientation of their head and eyes (if visible) to infer their gaze direction.
4. Identify and locate all plausible gaze targets (objects and/or persons) in the image that are visible to the people of interest, that is, that are within their field-of-view.
5. Describe the spatial relationships between the people of interest and each of these plausible gaze targets.
6. Based on the scene context and information above, determine whether the people of interest are engaged in social gaze.
)TPL"
    "7. Using your reasoning, estimate the probability of <task> for the people of interest. \n"
    R"TPL(
### Input/Output Format:
- **Input:** An image followed by a pair of **bounding box coordinates** of the heads of the people of interest.
- **Output:** Report in JSON format:
  - **label** the probability of <task>.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Social Gaze Label ###
```json
[
)TPL"
    "{\"label\": <0.0-1.0>} \n"
    "]\n"
    "```";

const std::string_view kSgPrInContext =
    R"TPL(<Task description>

**In order to achieve your task, you can first do a step-by-step analysis**. Your entire response, including reasoning and final answer, must not exceed 1000 tokens and avoid repetition.

### Input/Output Format:
- **Input:** An image followed by a pair of **bounding box coordinates** of the heads of the people of interest.
- **Output:** Report in JSON format:
  - **label** the probability of <task>.

**Required Output Format:**
### Reasoning ###
<Your step-by-step reasoning here>

### Social Gaze Label ###
```json
[
{"label": <0.0-1.0>}
]
```

To help you understand how to do the analysis, I provide you with two examples:)TPL";

const std::string_view kSgInContextClose =
    "Examples provided. Now, analyze the following image.";

const std::string_view kProbePrompt =
    R"TPL(Look at the region defined by the bounding box coordinate <bounding box coordinates>. Is there a person's head inside this bounding box? Answer only `Yes' or `No'.)TPL";

}  // namespace gazebench::prompting::texts
