import json
import math

import pytest

from common.errors import ConfigError, MalformedResponse, ScriptExhausted
from gateway.backend import RecordingBackend
from gateway.http import parse_completion
from gateway.model import Completion, FinishReason, GenerationParams, TokenLogprob
from gateway.scripted import ScriptedBackend


def test_stop_sequences_from_config_string():
    assert GenerationParams(stop="\n,###").stop_sequences == ("\n", "###")
    assert GenerationParams(stop="").stop_sequences == ()


def test_generation_params_accept_field_names_and_config_spellings():
    by_name = GenerationParams(stop_sequences=("###",), logprobs_requested=False)
    by_alias = GenerationParams.model_validate({"stop": "###", "logprobs": False})
    assert by_name == by_alias
    assert by_name.logprobs_requested is False
    assert GenerationParams().logprobs_requested is True


def test_generation_params_reject_bad_values():
    with pytest.raises(ValueError):
        GenerationParams(max_tokens=0)
    with pytest.raises(ValueError):
        GenerationParams(temperature=-0.1)


def test_probability_from_logprob():
    assert TokenLogprob.from_logprob("a", 0.0).probability == 1.0
    assert TokenLogprob.from_logprob("a", math.log(0.25)).probability == pytest.approx(0.25)
    # rounding noise above zero is clipped
    assert TokenLogprob.from_logprob("a", 1e-9).probability == 1.0
    with pytest.raises(ValueError):
        TokenLogprob.from_logprob("a", float("nan"))


def test_probability_from_logits_is_max_softmax():
    assert TokenLogprob.from_logits("a", [0.0, 0.0]).probability == pytest.approx(0.5)
    assert TokenLogprob.from_logits("a", [math.log(3.0), 0.0]).probability == pytest.approx(0.75)
    assert TokenLogprob.from_logits("a", [1000.0, 0.0]).probability == pytest.approx(1.0)


def test_completion_tokens_must_spell_the_text():
    Completion(text="Hi there", tokens=(TokenLogprob("Hi", 0.9), TokenLogprob(" there", 0.8)))
    with pytest.raises(ValueError):
        Completion(text="Hi there", tokens=(TokenLogprob("Hi", 0.9),))
    with pytest.raises(ValueError):
        Completion(text="Hi", tokens=(TokenLogprob("Hi", 1.5),))


def test_token_offsets():
    completion = Completion(text=" a bc", tokens=(TokenLogprob(" a", 0.5), TokenLogprob(" bc", 0.5)))
    assert completion.token_offsets() == [(0, 2), (2, 5)]


def test_scripted_backend_replays_in_order(scripted):
    scripted.add("p", "first", [("first", 0.5)])
    scripted.add("p", "second")
    params = GenerationParams()

    first = scripted.complete("p", params)
    assert first.text == "first"
    assert first.tokens == (TokenLogprob("first", 0.5),)
    # trailing whitespace of the prompt is ignored
    assert scripted.complete("p \n", params).text == "second"
    with pytest.raises(ScriptExhausted):
        scripted.complete("p", params)
    assert scripted.prompts == ["p", "p \n", "p"]


def test_scripted_backend_drops_tokens_without_logprobs(scripted):
    scripted.add("p", "x", [("x", 0.5)])
    assert scripted.complete("p", GenerationParams(logprobs_requested=False)).tokens == ()


def test_scripted_backend_rejects_blank_prompt(scripted):
    with pytest.raises(ValueError):
        scripted.complete("  ", GenerationParams())


def test_scripted_backend_from_file(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(
        json.dumps([{"prompt": "Q", "text": " A.", "tokens": [[" A", 0.9], [".", 1.0]], "finish_reason": "length"}]),
        encoding="utf-8",
    )
    backend = ScriptedBackend.from_file(path)
    completion = backend.complete("Q", GenerationParams())
    assert completion.finish_reason is FinishReason.LENGTH
    assert [t.probability for t in completion.tokens] == [0.9, 1.0]
    assert backend.remaining() == 0


@pytest.mark.parametrize("content", ["{not json", '{"prompt": "a"}', '[{"prompt": "a"}]'])
def test_scripted_backend_rejects_bad_files(tmp_path, content):
    path = tmp_path / "script.json"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError):
        ScriptedBackend.from_file(path)


def test_recording_backend_records_calls(scripted):
    scripted.add("one", "1")
    scripted.add("two", "2")
    recorder = RecordingBackend.wrap(scripted)
    recorder.complete("one", GenerationParams())
    recorder.complete("two", GenerationParams())
    assert [(c.prompt, c.reply) for c in recorder.calls] == [("one", "1"), ("two", "2")]


def response(**logprobs):
    return {"choices": [{"text": " Hi there", "finish_reason": "stop", "logprobs": logprobs}]}


def test_parse_completion_with_logprobs():
    body = response(tokens=[" Hi", " there"], token_logprobs=[0.0, math.log(0.5)])
    completion = parse_completion(body, logprobs_requested=True)
    assert completion.text == " Hi there"
    assert [t.probability for t in completion.tokens] == pytest.approx([1.0, 0.5])
    assert completion.finish_reason is FinishReason.STOP


def test_parse_completion_prefers_logits():
    body = response(tokens=[" Hi", " there"], token_logprobs=[0.0, 0.0], token_logits=[[0.0, 0.0], [0.0, 0.0]])
    completion = parse_completion(body, logprobs_requested=True)
    assert [t.probability for t in completion.tokens] == pytest.approx([0.5, 0.5])


def test_parse_completion_skips_empty_tokens():
    body = response(tokens=[" Hi", "", " there"], token_logprobs=[0.0, -1.0, 0.0])
    assert len(parse_completion(body, logprobs_requested=True).tokens) == 2


def test_parse_completion_without_logprobs_ignores_them():
    body = {"choices": [{"text": "x", "finish_reason": "content_filter"}]}
    completion = parse_completion(body, logprobs_requested=False)
    assert completion.tokens == ()
    assert completion.finish_reason is FinishReason.BACKEND_END


@pytest.mark.parametrize(
    "body",
    [
        {},
        {"choices": []},
        {"choices": [{"text": "x"}]},
        response(tokens=[" Hi", " there"], token_logprobs=[0.0]),
        response(tokens=[" Hello"], token_logprobs=[0.0]),
    ],
)
def test_parse_completion_rejects_malformed_bodies(body):
    with pytest.raises(MalformedResponse):
        parse_completion(body, logprobs_requested=True)


def test_parse_completion_merges_split_characters():
    body = {
        "choices": [
            {
                "text": " Dvořák",
                "finish_reason": "stop",
                "logprobs": {
                    "tokens": [" Dvo", "bytes:\\xc5", "bytes:\\x99", "ák"],
                    "token_logprobs": [0.0, math.log(0.6), math.log(0.3), 0.0],
                },
            }
        ]
    }
    completion = parse_completion(body, logprobs_requested=True)
    assert [t.token_text for t in completion.tokens] == [" Dvo", "ř", "ák"]
    assert completion.tokens[1].probability == pytest.approx(0.3)
    assert completion.token_offsets() == [(0, 4), (4, 5), (5, 7)]


def test_parse_completion_rejects_unreadable_byte_tokens():
    body = response(tokens=[" Hi", "bytes:zz", " there"], token_logprobs=[0.0, 0.0, 0.0])
    with pytest.raises(MalformedResponse):
        parse_completion(body, logprobs_requested=True)
