"""Teaching walkthrough: grow the robot's vocabulary mid-conversation.

The session starts with four primitives plus pickup(). The operator asks for
something the planner cannot express ("pack ..."), supplies a spoken
decomposition, then grounds a brand-new object with a single click in the
overhead camera view. Both teaching events commit only after the plan they
enabled executes successfully.
"""

from sandbox.planner import DeterministicBackend
from sandbox.seeds import GIFT_BAG_ALIASES, GIFT_BAG_SCENE, gift_bag_api
from sandbox.session import Session


def say(label, text):
    print(f"{label:>9}: {text}")


def show_records(records):
    for rec in records:
        if rec.kind == "plan" and rec.payload.get("outcome") == "ok":
            say("planner", rec.payload["plan"])
        elif rec.kind == "teach_begin":
            p = rec.payload
            if p["kind"] == "function_synthesized":
                say("robot", f"learned {p['signature']}  =  {p['body']}")
            elif p["kind"] == "argument_bound":
                say("robot", f"bound {p['name']} to the object at "
                             f"({p['px']:.0f}, {p['py']:.0f})")
            else:
                say("robot", p.get("prompt", p))
        elif rec.kind == "exec_step":
            say("exec", f"{rec.payload['skill']} -> {rec.payload['status']}")
        elif rec.kind == "teach_commit":
            say("api", rec.payload["change"])
        elif rec.kind == "outcome":
            say("outcome", rec.payload["status"])


def drive(session, event, label=None):
    if label:
        say("operator", label)
    show_records(session.handle_event(event))
    print()


def main():
    session = Session("demo", gift_bag_api(), GIFT_BAG_SCENE,
                      DeterministicBackend(GIFT_BAG_ALIASES))
    print(f"seed API: version {session.api.version}, "
          f"{len(session.api.functions)} functions\n")

    drive(session,
          {"kind": "utterance", "t_ms": 1000,
           "text": "now can you pack the candy in the bag"},
          label="now can you pack the candy in the bag")

    drive(session,
          {"kind": "decomposition", "t_ms": 6000,
           "text": "Pick up the candy; go above the bag; drop it"},
          label="Pick up the candy; go above the bag; drop it")

    drive(session, {"kind": "confirm", "accept": True, "t_ms": 8000},
          label="(confirms the proposed plan)")

    fn = session.api.function("pack")
    print(f"committed: {fn.signature_text()}  # version {session.api.version}\n")

    drive(session,
          {"kind": "utterance", "t_ms": 12000,
           "text": "pack the toy car in the gift bag"},
          label="pack the toy car in the gift bag")

    drive(session, {"kind": "keypoint", "px": 445.0, "py": 390.0,
                    "t_ms": 14000},
          label="(clicks the toy car in the overhead view)")

    drive(session, {"kind": "confirm", "accept": True, "t_ms": 15000},
          label="(confirms)")

    print(f"final API version: {session.api.version}")
    print(f"taught: {session.metrics.teach_counts}")
    print(f"supervision time: {session.metrics.supervision_time_s:.1f} s, "
          f"behavior complexity: {session.metrics.behavior_complexity:.2f}")


if __name__ == "__main__":
    main()
