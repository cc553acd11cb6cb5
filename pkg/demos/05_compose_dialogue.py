"""Two-step dialogue composition from a recognition result.

Step one asks the language model for a spoken reply to the recognized
sign. Step two shows it the gesture inventory and asks it to wrap parts
of that reply in gesture tags. Invalid markup is retried with the parse
error appended; if the budget runs out the reply is stripped to plain
speech rather than failing. The mock backend used here is deterministic,
so the whole exchange is reproducible offline.
"""

from importlib import resources

from signpipe.dialogue import (
    MockLlmBackend,
    PromptTemplate,
    RecognitionEvent,
    compose,
)
from signpipe.gesture import load_descriptors, render_markup, schedule


def main():
    db = load_descriptors(
        str(resources.files("signpipe.data") / "descriptors.sample.json"))
    template = PromptTemplate.default()
    event = RecognitionEvent(gloss="cloud", confidence_pct=90.0)

    result = compose(event, db, MockLlmBackend(seed=0), template)
    print(f"backend calls: {result.backend_calls}")
    print(f"spoken reply:  {result.spoken_reply}")
    print(f"tagged script: {render_markup(result.script)}")
    for w in result.warnings:
        print(f"warning: {w}")

    timeline = schedule(result.script, db)
    print(f"schedules into {len(timeline.events)} timeline events")

    # different seeds give different but always-valid dialogue
    for seed in (1, 2):
        alt = compose(event, db, MockLlmBackend(seed=seed), template)
        print(f"seed {seed}: {render_markup(alt.script)}")


if __name__ == "__main__":
    main()
