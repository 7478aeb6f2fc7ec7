#!/usr/bin/env python3
"""Writes data/default_manifest.json.

Usage: gen_manifest.py [output-path]
"""

import json
import pathlib
import sys


def field(name, kind, required=False, default=None, description="", **constraints):
    f = {"name": name, "kind": kind, "required": required}
    if default is not None:
        f["default"] = default
    if constraints:
        f["constraints"] = constraints
    if description:
        f["description"] = description
    return f


def tool(name, description, tags, kind, category, fields, shape="any", required_fields=None,
         availability="always", binding="", exposure="planner_visible", max_retries=0,
         budget_cost=1, timeout=30):
    out = {"shape": shape}
    if required_fields:
        out["required_fields"] = required_fields
    return {
        "name": name,
        "description": description,
        "tags": tags,
        "kind": kind,
        "category": category,
        "input_schema": {"fields": fields},
        "output_schema": out,
        "availability": availability,
        "constraints": {"timeout": timeout, "max_retries": max_retries,
                        "budget_cost": budget_cost, "deterministic": True},
        "exposure": exposure,
        "binding": binding,
    }


QUERY = field("query", "string", True, description="what to look for")
T_START = field("t_start", "time_seconds", True, description="window start in seconds")
T_END = field("t_end", "time_seconds", True, description="window end in seconds")
OPT_START = field("t_start", "time_seconds", False, description="window start, defaults to 0")
OPT_END = field("t_end", "time_seconds", False, description="window end, defaults to the video end")
AT = field("t", "time_seconds", True, description="timestamp in seconds")

RS = "Retrieval/Search"
VV = "Visual/Video"
AS = "Audio/Speech"
EC = "Execution/Coding"
MS = "Memory/System"


def base_tools():
    b = "base"
    return [
        # retrieval / search
        tool("Temporal_Retrieval", "Retrieve event windows on the video timeline whose content matches a text query, ranked by relevance",
             ["retrieval", "temporal", "video", "search"], b, RS,
             [QUERY, field("k", "integer", False, 5, "number of windows", min=1, max=50)],
             "list", ["t_start", "t_end"], binding="sim.temporal_retrieval", max_retries=1, budget_cost=3),
        tool("Segment_Retrieval", "Rank preprocessed video segments by caption and transcript overlap with a question",
             ["retrieval", "segments", "video"], b, RS,
             [QUERY, field("k", "integer", False, 3, "number of segments", min=1, max=20)],
             "list", ["t_start", "t_end"], binding="sim.segment_retrieval", budget_cost=2),
        tool("Transcript_Search", "Search the spoken transcript for lines mentioning the query words",
             ["transcript", "speech", "search"], b, RS, [QUERY], "list", ["t_start", "t_end", "text"],
             availability="requires_modality(transcript)", binding="sim.transcript_search", budget_cost=2),
        tool("Caption_Search", "Find segments whose generated caption mentions the query words",
             ["caption", "segments", "search"], b, RS, [QUERY], "list", ["t_start", "t_end"],
             binding="sim.caption_search", budget_cost=2),
        tool("Event_Lookup", "Look up indexed events by label",
             ["events", "index", "lookup"], b, RS, [field("label", "string", True, description="event label")],
             "list", ["label", "t_start", "t_end"], availability="requires_index(events)",
             binding="sim.event_lookup", budget_cost=1),
        tool("Frame_Retrieval", "Return frame references at moments where the queried content is visible",
             ["frames", "retrieval", "visual"], b, RS,
             [QUERY, field("interval", "real", False, 1.0, "scan step in seconds", min=0.1),
              field("k", "integer", False, 8, "maximum frames", min=1, max=64)],
             "list", ["t", "frame_ref"], binding="sim.frame_retrieval", budget_cost=3),
        tool("Web_Search", "Query an external web search engine",
             ["web", "external", "search"], b, RS, [QUERY], "list",
             availability="requires_index(web)", binding="external.unavailable", budget_cost=5),
        tool("Knowledge_Graph_Query", "Query an external knowledge graph for facts about an entity",
             ["knowledge", "external", "entity"], b, RS, [field("entity", "string", True)], "list",
             availability="requires_index(knowledge_graph)", binding="external.unavailable", budget_cost=5),
        tool("Document_Search", "Search an attached document collection",
             ["documents", "external", "search"], b, RS, [QUERY], "list",
             availability="requires_index(documents)", binding="external.unavailable", budget_cost=4),
        tool("Tool_Search", "Engine-side lookup of registered tools relevant to an intent",
             ["tools", "routing", "internal"], b, RS,
             [QUERY, field("k", "integer", False, 5, min=1, max=50)], "list", ["name", "score"],
             binding="runtime.tool_search", exposure="runtime_internal"),
        # visual / video
        tool("Video_Clip_QA", "Answer a yes or no question about a short clip between two timestamps",
             ["clip", "qa", "video", "verify"], b, VV, [T_START, T_END, QUERY],
             "record", ["verdict", "t_start", "t_end"], binding="sim.clip_qa", max_retries=1, budget_cost=4),
        tool("Inspect_Frame", "Describe the visible content of the frame at one timestamp",
             ["frame", "inspect", "visual"], b, VV, [AT], "record", ["labels", "frame_ref"],
             binding="sim.inspect_frame", budget_cost=2),
        tool("Crop", "Crop a region of the frame at one timestamp and describe it",
             ["frame", "crop", "visual"], b, VV,
             [AT, field("region", "string", False, "center", one_of=["center", "left", "right", "top", "bottom"])],
             "record", ["labels", "frame_ref"], binding="sim.crop", budget_cost=2),
        tool("Zoom_in", "Magnify the frame at one timestamp to read fine details and attributes",
             ["frame", "zoom", "visual", "detail"], b, VV,
             [AT, field("factor", "real", False, 2.0, min=1.0, max=8.0)], "record", ["labels", "frame_ref"],
             binding="sim.zoom", budget_cost=2),
        tool("Object_Detection", "Detect object words present in the frame at one timestamp",
             ["objects", "detection", "visual"], b, VV, [AT], "list", ["object"],
             binding="sim.object_detection", budget_cost=3),
        tool("OCR", "Read on-screen text within a time window",
             ["ocr", "text", "visual"], b, VV, [OPT_START, OPT_END], "list", ["text"],
             binding="sim.ocr", budget_cost=3),
        tool("Scene_Change_Detection", "List timestamps where the visual scene changes",
             ["scene", "shots", "visual"], b, VV, [], "list", binding="sim.scene_changes", budget_cost=2),
        # audio / speech
        tool("ASR", "Transcribe speech within a time window",
             ["speech", "transcribe", "audio"], b, AS, [OPT_START, OPT_END], "list", ["text"],
             availability="requires_modality(audio)", binding="sim.asr", budget_cost=3),
        tool("Audio_Event_Detection", "Detect non-speech sounds within a time window",
             ["sound", "audio", "events"], b, AS, [OPT_START, OPT_END], "list", ["sound"],
             availability="requires_modality(audio)", binding="sim.audio_events", budget_cost=3),
        tool("Speaker_Diarization", "Attribute transcript lines to speakers",
             ["speaker", "audio", "diarization"], b, AS, [], "list", ["speaker"],
             availability="requires_modality(audio)", binding="sim.diarization", budget_cost=3),
        tool("Audio_QA", "Answer a yes or no question about what is said within a time window",
             ["audio", "qa", "speech"], b, AS, [QUERY, OPT_START, OPT_END], "record", ["verdict"],
             availability="requires_modality(audio)", binding="sim.audio_qa", budget_cost=3),
        # execution / coding
        tool("Python_Executor", "Evaluate an arithmetic expression and return the numeric result",
             ["python", "compute", "arithmetic"], b, EC,
             [field("code", "string", True, description="expression to evaluate")], "record", ["result"],
             binding="exec.python", budget_cost=2),
        tool("Calculator", "Apply one binary arithmetic operator to two numbers",
             ["calculator", "arithmetic"], b, EC,
             [field("a", "real", True), field("b", "real", True),
              field("op", "string", True, one_of=["+", "-", "*", "/"])], "record", ["result"],
             binding="exec.calculator"),
        tool("Timestamp_Formatter", "Render a number of seconds as a clock timestamp",
             ["timestamp", "format"], b, EC, [field("seconds", "time_seconds", True)], "string",
             binding="exec.format_time"),
        # memory / system
        tool("Context_Compression", "Engine-side trimming of accumulated evidence to the most recent items",
             ["memory", "context", "internal"], b, MS,
             [field("items", "list", True), field("max_items", "integer", False, 5, min=1)],
             "record", ["kept"], binding="runtime.context_compression", exposure="runtime_internal"),
        tool("Exception_Recovery", "Engine-side advice for recovering from a failed call",
             ["recovery", "failure", "internal"], b, MS, [field("failure", "string", True)],
             "record", ["advice"], binding="runtime.exception_recovery", exposure="runtime_internal"),
    ]


ITEMS = field("items", "list", True, description="input list")
RANGES = field("ranges", "list", True, description="time ranges as [t_start, t_end] or records")
FIELD = field("field", "string", True, description="record member to use")
OPT_FIELD = field("field", "string", False, "", "record member to use; empty means the item itself")


def num(name, required=True, default=None, **c):
    return field(name, "real", required, default, **c)


def meta_tools():
    m = "meta"
    T = "Ranking", "Aggregation", "Temporal/Window", "Math", "Text", "Filtering", "Grouping", "Sampling/Thresholding"
    RK, AG, TW, MA, TX, FI, GR, ST = T

    def table(name, category, op, description, tags, fields, shape="any", required_fields=None):
        return tool(name, description, tags, m, category, fields, shape, required_fields,
                    binding="meta.table:" + op)

    k = lambda d: field("k", "integer", False, d, min=1)
    rows = [
        # ranking (12)
        tool("Rerank_Candidates", "Reorder candidates by a weighted sum of numeric score fields",
             ["rank", "rerank", "score"], m, RK,
             [ITEMS, field("score_fields", "any", True, description="{name: weight} or [[name, weight], ...]")],
             "list", binding="meta.rerank_candidates"),
        table("Top_K_Select", RK, "top_k", "Keep the k items with the highest value of a field", ["rank", "top"], [ITEMS, OPT_FIELD, k(5)], "list"),
        table("Bottom_K_Select", RK, "bottom_k", "Keep the k items with the lowest value of a field", ["rank", "bottom"], [ITEMS, OPT_FIELD, k(5)], "list"),
        table("Sort_By_Field", RK, "sort_by", "Order items ascending by a numeric field", ["sort", "order"],
              [ITEMS, OPT_FIELD, field("descending", "boolean", False, False)], "list"),
        table("Sort_Descending", RK, "sort_by", "Order items from largest to smallest value", ["sort", "order", "descending"],
              [ITEMS, OPT_FIELD, field("descending", "boolean", False, True)], "list"),
        table("Rank_Items", RK, "rank", "Attach a 1-based rank by descending field value", ["rank"], [ITEMS, OPT_FIELD], "list", ["rank"]),
        table("Reverse_List", RK, "reverse", "Reverse the order of a list", ["order", "reverse"], [ITEMS], "list"),
        table("Argmax_Item", RK, "argmax", "Return the item with the largest field value", ["max", "best"], [ITEMS, OPT_FIELD]),
        table("Argmin_Item", RK, "argmin", "Return the item with the smallest field value", ["min", "worst"], [ITEMS, OPT_FIELD]),
        table("Top_1_Select", RK, "top_k", "Keep only the single best-scoring item", ["rank", "top"], [ITEMS, OPT_FIELD, k(1)], "list"),
        table("Top_3_Select", RK, "top_k", "Keep the three best-scoring items", ["rank", "top"], [ITEMS, OPT_FIELD, k(3)], "list"),
        table("Rank_By_Score", RK, "rank", "Rank items by their score member", ["rank", "score"],
              [ITEMS, field("field", "string", False, "score")], "list", ["rank"]),
        # aggregation (16)
        tool("Count_Occurrences", "Count how often each value (or each value of a key) appears",
             ["count", "tally", "frequency"], m, AG,
             [ITEMS, field("key", "string", False, description="record member to count by")],
             "record", binding="meta.count_occurrences"),
        table("Sum_Values", AG, "sum", "Add up numeric values", ["sum", "total"], [ITEMS, OPT_FIELD], "number"),
        table("Mean_Value", AG, "mean", "Arithmetic mean of numeric values", ["mean", "average"], [ITEMS, OPT_FIELD], "number"),
        table("Min_Value", AG, "min", "Smallest numeric value", ["min"], [ITEMS, OPT_FIELD], "number"),
        table("Max_Value", AG, "max", "Largest numeric value", ["max"], [ITEMS, OPT_FIELD], "number"),
        table("Median_Value", AG, "median", "Median of numeric values", ["median"], [ITEMS, OPT_FIELD], "number"),
        table("Count_Items", AG, "length", "Number of items in a list", ["count", "length"], [ITEMS], "number"),
        table("Count_Distinct", AG, "count_distinct", "Number of distinct values", ["count", "distinct"], [ITEMS, OPT_FIELD], "number"),
        table("Unique_Values", AG, "unique", "Distinct values in first-seen order", ["unique", "distinct"], [ITEMS, OPT_FIELD], "list"),
        table("Flatten_Lists", AG, "flatten", "Concatenate nested lists one level deep", ["flatten"], [ITEMS], "list"),
        table("First_Item", AG, "first", "First element of a list", ["first"], [ITEMS]),
        table("Last_Item", AG, "last", "Last element of a list", ["last"], [ITEMS]),
        table("Histogram", AG, "histogram", "Bucket numeric values into fixed-width bins", ["histogram", "bins"],
              [ITEMS, OPT_FIELD, num("bin_width", False, 10.0, min=0.001)], "list", ["count"]),
        table("Collect_Field", AG, "pluck", "Extract one member from every record", ["pluck", "extract"], [ITEMS, FIELD], "list"),
        table("Concatenate_Lists", AG, "concat", "Append a second list to the first", ["concat", "append"],
              [ITEMS, field("other", "list", True)], "list"),
        table("Mode_Value", AG, "mode", "Most frequent value, earliest on ties", ["mode", "frequent"], [ITEMS, OPT_FIELD]),
        # temporal / window (16)
        tool("Sort_Time_Ranges", "Order time ranges chronologically by start then end",
             ["sort", "chronological", "ranges"], m, TW, [RANGES], "list", ["t_start", "t_end"],
             binding="meta.sort_time_ranges"),
        tool("Merge_Temporal_Segments", "Merge adjacent time windows whose gap is within a tolerance into continuous events",
             ["merge", "temporal", "windows", "adjacent"], m, TW,
             [RANGES, field("tolerance", "real", False, 2.0, "largest gap in seconds that still merges", min=0)],
             "list", ["t_start", "t_end"], binding="meta.merge_temporal_segments"),
        table("Total_Duration", TW, "total_duration", "Sum of range lengths", ["duration", "total"], [RANGES], "number"),
        table("Covered_Duration", TW, "covered_duration", "Length of the union of ranges", ["duration", "coverage"], [RANGES], "number"),
        table("Find_Gaps", TW, "gaps", "Uncovered stretches between ranges", ["gaps"], [RANGES], "list"),
        table("Intersect_Ranges", TW, "intersect", "Pairwise overlaps between two range lists", ["intersect", "overlap"],
              [RANGES, field("other", "list", True)], "list"),
        table("Shift_Ranges", TW, "shift", "Offset every range by a number of seconds", ["shift", "offset"],
              [RANGES, num("offset")], "list"),
        table("Pad_Ranges", TW, "pad", "Widen every range on both sides", ["pad", "expand"], [RANGES, num("amount", min=0)], "list"),
        table("Clip_To_Window", TW, "clip", "Trim ranges to lie within a window", ["clip", "trim"],
              [RANGES, num("lo"), num("hi")], "list"),
        table("Range_Durations", TW, "durations", "Length of each range", ["duration", "length"], [RANGES], "list"),
        table("Filter_Overlapping", TW, "overlapping", "Keep ranges that overlap a window", ["overlap", "window"],
              [RANGES, num("lo"), num("hi")], "list"),
        table("Earliest_Range", TW, "earliest", "Range that starts first", ["earliest", "first"], [RANGES], "record"),
        table("Latest_Range", TW, "latest", "Range that ends last", ["latest", "last"], [RANGES], "record"),
        table("Range_Midpoints", TW, "midpoints", "Center timestamp of each range", ["midpoint", "center"], [RANGES], "list"),
        table("Longest_Range", TW, "longest", "Range with the greatest length", ["longest"], [RANGES], "record"),
        table("Split_Fixed_Windows", TW, "split_window", "Cut a span into consecutive fixed-size windows", ["split", "window"],
              [T_START, T_END, num("size", False, 30.0, min=0.001)], "list"),
        # math (16)
        table("Add_Numbers", MA, "add", "Sum of two numbers", ["add", "plus"], [num("a"), num("b")], "number"),
        table("Subtract_Numbers", MA, "subtract", "Difference of two numbers", ["subtract", "minus"], [num("a"), num("b")], "number"),
        table("Multiply_Numbers", MA, "multiply", "Product of two numbers", ["multiply"], [num("a"), num("b")], "number"),
        table("Divide_Numbers", MA, "divide", "Quotient of two numbers", ["divide"], [num("a"), num("b")], "number"),
        table("Absolute_Value", MA, "abs", "Magnitude of a number", ["abs"], [num("a")], "number"),
        table("Round_Number", MA, "round", "Round to a number of decimal digits", ["round"],
              [num("a"), field("digits", "integer", False, 0, min=0, max=12)], "number"),
        table("Square_Root", MA, "sqrt", "Square root of a non-negative number", ["sqrt"], [num("a")], "number"),
        table("Power", MA, "power", "Raise a to the power b", ["power", "exponent"], [num("a"), num("b")], "number"),
        table("Modulo", MA, "mod", "Remainder of a divided by b", ["mod", "remainder"], [num("a"), num("b")], "number"),
        table("Percentage", MA, "percent", "a as a percentage of b", ["percent", "ratio"], [num("a"), num("b")], "number"),
        table("Clamp_Value", MA, "clamp", "Limit a number to an interval", ["clamp", "bound"],
              [num("a"), num("lo"), num("hi")], "number"),
        table("Scale_Values", MA, "scale", "Multiply every value by a factor", ["scale"], [ITEMS, OPT_FIELD, num("factor")], "list"),
        table("Min_Max_Normalize", MA, "normalize", "Rescale values to the unit interval", ["normalize"], [ITEMS, OPT_FIELD], "list"),
        table("Z_Score", MA, "zscore", "Standardize values by mean and deviation", ["zscore", "standardize"], [ITEMS, OPT_FIELD], "list"),
        table("Cumulative_Sum", MA, "cumsum", "Running total of values", ["cumulative", "running"], [ITEMS, OPT_FIELD], "list"),
        table("Differences", MA, "diff", "Differences between consecutive values", ["difference", "delta"], [ITEMS, OPT_FIELD], "list"),
        # text (14)
        table("To_Lowercase", TX, "lower", "Lowercase a string", ["lowercase", "case"], [field("text", "string", True)], "string"),
        table("To_Uppercase", TX, "upper", "Uppercase a string", ["uppercase", "case"], [field("text", "string", True)], "string"),
        table("Join_Strings", TX, "join", "Join list elements with a separator", ["join"],
              [ITEMS, field("separator", "string", False, " ")], "string"),
        table("Split_String", TX, "split", "Split a string on a separator", ["split", "tokenize"],
              [field("text", "string", True), field("separator", "string", False, " ")], "list"),
        table("Contains_Text", TX, "contains", "Whether a string contains a pattern, ignoring case", ["contains", "substring"],
              [field("text", "string", True), field("pattern", "string", True)]),
        table("Replace_Text", TX, "replace", "Replace every occurrence of a substring", ["replace"],
              [field("text", "string", True), field("old", "string", True), field("new", "string", False, "")], "string"),
        table("Strip_Whitespace", TX, "strip", "Trim surrounding whitespace", ["strip", "trim"], [field("text", "string", True)], "string"),
        table("String_Length", TX, "strlen", "Number of characters in a string", ["length", "characters"], [field("text", "string", True)], "number"),
        table("Word_Count", TX, "word_count", "Number of words in a string", ["words", "count"], [field("text", "string", True)], "number"),
        table("Extract_Numbers", TX, "extract_numbers", "Pull numeric literals out of text", ["numbers", "extract"],
              [field("text", "string", True)], "list"),
        table("Format_Timestamp", TX, "format_timestamp", "Render seconds as mm:ss or h:mm:ss", ["timestamp", "format"],
              [field("seconds", "time_seconds", True)], "string"),
        table("Concatenate_Strings", TX, "concat_text", "Join two strings with a separator", ["concat", "join"],
              [field("text", "string", True), field("other", "string", True), field("separator", "string", False, " ")], "string"),
        table("Keyword_Overlap", TX, "keyword_overlap", "Word-set similarity between two strings", ["similarity", "keywords"],
              [field("text", "string", True), field("other", "string", True)], "number"),
        table("Regex_Match", TX, "regex_match", "All matches of a regular expression", ["regex", "match"],
              [field("text", "string", True), field("pattern", "string", True)], "list"),
        # filtering (14)
        tool("Filter_Threshold", "Keep records whose numeric field passes a comparison",
             ["filter", "threshold", "compare"], m, FI,
             [ITEMS, FIELD, field("op", "string", False, ">=", one_of=[">=", "<=", ">", "<", "="]), num("value")],
             "list", binding="meta.filter_threshold"),
        table("Filter_By_Value", FI, "filter_eq", "Keep records whose field equals a value", ["filter", "equals"],
              [ITEMS, FIELD, field("value", "any", True)], "list"),
        table("Filter_Not_Equal", FI, "filter_ne", "Drop records whose field equals a value", ["filter", "exclude"],
              [ITEMS, FIELD, field("value", "any", True)], "list"),
        table("Filter_Contains", FI, "filter_contains", "Keep items whose text contains a pattern", ["filter", "contains"],
              [ITEMS, OPT_FIELD, field("pattern", "string", True)], "list"),
        table("Filter_In_Range", FI, "filter_range", "Keep items whose value lies in [lo, hi]", ["filter", "range"],
              [ITEMS, OPT_FIELD, num("lo"), num("hi")], "list"),
        table("Filter_Exists", FI, "filter_exists", "Keep records that have a member", ["filter", "exists"], [ITEMS, FIELD], "list"),
        table("Drop_Nulls", FI, "drop_nulls", "Remove null items or records with a null member", ["filter", "null"],
              [ITEMS, OPT_FIELD], "list"),
        table("Deduplicate", FI, "dedupe", "Remove repeated items", ["dedupe", "unique"], [ITEMS], "list"),
        table("Filter_In_Set", FI, "filter_in", "Keep items whose value is in a set", ["filter", "set"],
              [ITEMS, OPT_FIELD, field("values", "list", True)], "list"),
        table("Filter_Regex", FI, "filter_regex", "Keep items whose text matches a regular expression", ["filter", "regex"],
              [ITEMS, OPT_FIELD, field("pattern", "string", True)], "list"),
        table("Filter_Positive_Verdicts", FI, "filter_eq", "Keep clip answers whose verdict is yes", ["filter", "verdict", "positive"],
              [ITEMS, field("field", "string", False, "verdict"), field("value", "any", False, "yes")], "list"),
        table("Filter_Min_Duration", FI, "filter_min_duration", "Keep ranges at least a given length", ["filter", "duration"],
              [ITEMS, num("min_duration", min=0)], "list"),
        table("Exclude_Values", FI, "filter_not_in", "Drop items whose value is in a set", ["filter", "exclude"],
              [ITEMS, OPT_FIELD, field("values", "list", True)], "list"),
        table("Filter_By_Label", FI, "filter_eq", "Keep records with a given label", ["filter", "label"],
              [ITEMS, field("field", "string", False, "label"), field("value", "any", True)], "list"),
        # grouping (10)
        table("Group_By_Field", GR, "group_by", "Group records by a member value", ["group"], [ITEMS, FIELD], "record"),
        table("Group_Count", GR, "group_count", "Count records per member value", ["group", "count"], [ITEMS, FIELD], "record"),
        table("Group_Sum", GR, "group_sum", "Sum a value per group", ["group", "sum"],
              [ITEMS, FIELD, field("value_field", "string", True)], "record"),
        table("Group_Mean", GR, "group_mean", "Average a value per group", ["group", "mean"],
              [ITEMS, FIELD, field("value_field", "string", True)], "record"),
        table("Group_Max", GR, "group_max", "Largest value per group", ["group", "max"],
              [ITEMS, FIELD, field("value_field", "string", True)], "record"),
        table("Group_Min", GR, "group_min", "Smallest value per group", ["group", "min"],
              [ITEMS, FIELD, field("value_field", "string", True)], "record"),
        table("Partition_By_Threshold", GR, "partition", "Split items into above and below a cutoff", ["partition"],
              [ITEMS, OPT_FIELD, num("value")], "record", ["above", "below"]),
        table("Chunk_List", GR, "chunk", "Split a list into fixed-size chunks", ["chunk", "batch"],
              [ITEMS, field("size", "integer", False, 2, min=1)], "list"),
        table("Group_By_Label", GR, "group_by", "Group records by label", ["group", "label"],
              [ITEMS, field("field", "string", False, "label")], "record"),
        table("Bucket_By_Time", GR, "bucket_by_time", "Group ranges into fixed time buckets by start", ["bucket", "time"],
              [RANGES, num("size", False, 30.0, min=0.001)], "record"),
        # sampling / thresholding (10)
        table("Uniform_Sample", ST, "uniform_sample", "Pick k evenly spaced items keeping both ends", ["sample", "uniform"],
              [ITEMS, k(4)], "list"),
        table("Take_First_N", ST, "head", "First n items", ["head", "first"], [ITEMS, field("n", "integer", False, 3, min=0)], "list"),
        table("Take_Last_N", ST, "tail", "Last n items", ["tail", "last"], [ITEMS, field("n", "integer", False, 3, min=0)], "list"),
        table("Every_Nth", ST, "every_nth", "Every n-th item starting with the first", ["stride", "sample"],
              [ITEMS, field("n", "integer", False, 2, min=1)], "list"),
        table("Binarize_Threshold", ST, "binarize", "Mark each record as above or below a cutoff", ["binarize", "threshold"],
              [ITEMS, FIELD, num("value")], "list", ["above"]),
        table("Top_Fraction", ST, "top_fraction", "Keep the best fraction of items", ["fraction", "top"],
              [ITEMS, OPT_FIELD, num("fraction", False, 0.25, min=0.0001, max=1)], "list"),
        table("Quantile_Value", ST, "quantile", "Interpolated quantile of numeric values", ["quantile", "percentile"],
              [ITEMS, OPT_FIELD, num("q", False, 0.5, min=0, max=1)], "number"),
        table("Sample_Frame_Times", ST, "sample_times", "Evenly sampled timestamps inside a window, capped", ["frames", "sample"],
              [T_START, T_END, num("interval", False, 6.0, min=0.001), field("cap", "integer", False, 8, min=1)], "list"),
        table("Above_Mean", ST, "above_mean", "Keep items whose value exceeds the mean", ["mean", "threshold"],
              [ITEMS, OPT_FIELD], "list"),
        table("Confidence_Gate", ST, "gate", "Check whether the best value reaches a cutoff", ["gate", "confidence"],
              [ITEMS, OPT_FIELD, num("value")], "record", ["pass"]),
    ]
    return rows


def main():
    out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data" / "default_manifest.json"
    tools = base_tools() + meta_tools()
    names = [t["name"] for t in tools]
    assert len(names) == len(set(names)), "duplicate names"
    split = {}
    for t in tools:
        split.setdefault(t["kind"], {}).setdefault(t["category"], 0)
        split[t["kind"]][t["category"]] += 1
    doc = {
        "about": {
            "summary": "Shipped tool inventory. Tool names beyond a handful are local inventions.",
            "counts": {"total": len(tools), "base": sum(split["base"].values()), "meta": sum(split["meta"].values())},
            "split": split,
        },
        "tools": tools,
    }
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"wrote {out}: {len(tools)} tools {split}")


if __name__ == "__main__":
    main()
