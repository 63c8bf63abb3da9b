from __future__ import annotations

import pytest

from planloop.envs.household import build_problem, build_suite
from planloop.pddl import GroundAtom, ground
from planloop.protocol import QuestionTemplates, TemplateError, atom_to_question, goal_text


@pytest.fixture(scope="module")
def hh_templates(hh_task):
    return QuestionTemplates.for_task(hh_task, "household")


@pytest.fixture(scope="module")
def bw_templates(bw_task):
    return QuestionTemplates.for_task(bw_task, "bw")


def test_holding_single_instance_uses_article(hh_templates):
    question = atom_to_question(GroundAtom("holding", ("bowl_1",)), hh_templates)
    assert question == "Is the agent holding a bowl?"


def test_multi_instance_uses_index(hh_domain):
    spec = next(s for s in build_suite()["medium"] if s.name == "sorting_books_0")
    task = ground(hh_domain, build_problem(spec, hh_domain))
    templates = QuestionTemplates.for_task(task, "household")
    question = atom_to_question(GroundAtom("ontop", ("book_1", "shelf_2")), templates)
    assert question == "Is book 1 on top of shelf 2?"


def test_in_column_question(bw_templates):
    question = atom_to_question(GroundAtom("incolumn", ("y", "c3")), bw_templates)
    assert question == "Is the yellow block in column C3?"


def test_clear_question(bw_templates):
    question = atom_to_question(GroundAtom("clear", ("y",)), bw_templates)
    assert question == "Is the yellow block the topmost block of its column?"


def test_on_and_direction_questions(bw_templates):
    assert (
        atom_to_question(GroundAtom("on", ("y", "p")), bw_templates)
        == "Is the yellow block on top of the purple block?"
    )
    assert (
        atom_to_question(GroundAtom("leftof", ("c1", "c2")), bw_templates)
        == "Is column C1 to the left of column C2?"
    )


def test_reachable_question(hh_templates):
    question = atom_to_question(GroundAtom("reachable", ("cabinet_1",)), hh_templates)
    assert question == "Is the cabinet within the agent's reach?"


def test_missing_template_raises(bw_templates):
    with pytest.raises(TemplateError):
        atom_to_question(GroundAtom("floating", ("y",)), bw_templates)


def test_bw_goal_text(bw_task, bw_templates):
    text = goal_text(bw_task, bw_templates)
    assert "The yellow block must end up in column C3." in text
    assert "The purple block must end up in column C4." in text
    assert "must have nothing on top of it." in text


def test_hh_goal_text(hh_task, hh_templates):
    assert goal_text(hh_task, hh_templates) == "The bowl must be on top of the sink."


def test_hh_negative_goal_text(hh_domain):
    spec = next(s for s in build_suite()["simple"] if s.name == "locking_every_door_0")
    task = ground(hh_domain, build_problem(spec, hh_domain))
    templates = QuestionTemplates.for_task(task, "household")
    text = goal_text(task, templates)
    assert "Door 1 must be closed." in text
    assert "Door 2 must be closed." in text
