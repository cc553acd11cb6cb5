"""Parse tagged speech and lay it out on a gesture timeline.

Replies use flat bracket markup: [Tag]spoken words[/Tag] spans name a
prerecorded gesture that plays while those words are spoken. The
scheduler paces speech at a fixed words-per-minute rate and warns when a
gesture badly overruns its span or when two overlapping gestures need
the same body part.
"""

from importlib import resources

from signpipe.gesture import (
    GestureEvent,
    load_descriptors,
    parse_markup,
    playtime_stats,
    schedule,
    strip_tags,
)

REPLY = ("[Yes] Great! [/Yes] You drew a cloud sign, but "
         "[Excited] guess what? [/Excited] Today's weather is sunny! "
         "[ShowSky] Look at the sky! [/ShowSky].")


def main():
    db = load_descriptors(
        str(resources.files("signpipe.data") / "descriptors.sample.json"))
    print(f"descriptor db: {len(db)} gestures")
    for name, value in playtime_stats(db).as_pairs():
        print(f"  playtime {name}: {value:.4g}s")

    script = parse_markup(REPLY, db)
    print(f"\nparsed {len(script.segments)} segments")
    print(f"spoken text: {strip_tags(script)}")

    timeline = schedule(script, db, speech_rate_wpm=150)
    print("\ntimeline:")
    for e in timeline.events:
        if isinstance(e, GestureEvent):
            print(f"  {e.start_s:5.2f}s  gesture {e.tag} "
                  f"({e.duration_s:.2f}s, {', '.join(sorted(e.body_parts))})")
        else:
            print(f"  {e.start_s:5.2f}s  speech  {e.text!r}")
    for w in timeline.warnings:
        print(f"  warning: {w}")


if __name__ == "__main__":
    main()
