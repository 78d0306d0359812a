"""Random schema-valid ASTs built by mutating library skeletons."""

from __future__ import annotations

import random

from rdfbench.graph import IRI
from rdfbench.policy import Category
from rdfbench.sparql import ASK, SELECT, Count, OrderKey, QueryAst, Var, parse_query
from rdfbench.sparql.ast import check_ast
from rdfbench.templates import builtin_library, pin_slots

_LIBRARY = builtin_library()
_PIN = [IRI("http://dbpedia.org/resource/Airbus"), IRI("http://dbpedia.org/resource/California"),
        IRI("http://dbpedia.org/resource/Software"), IRI("http://dbpedia.org/resource/Mark_Zuckerberg")]


def random_ast(rng: random.Random) -> QueryAst:
    source = rng.choice(list(Category))
    tpl = rng.choice(_LIBRARY[source])
    ast = parse_query(tpl.sparql_skeleton)
    if tpl.slot_types and rng.random() < 0.5:
        ast = pin_slots(ast, {s: rng.choice(_PIN) for s in tpl.slot_types})
    variables = ast.outer_variables()
    roll = rng.random()
    if ast.form == ASK and variables and roll < 0.5:
        ast = ast.replace(form=SELECT, projection=tuple(rng.sample(variables, rng.randint(1, len(variables)))))
    elif ast.form == SELECT and not ast.aggregates and roll < 0.15:
        ast = ast.replace(form=ASK, projection=(), distinct=False, order_keys=(), limit=None)
    if ast.aggregates and rng.random() < 0.4:
        ast = ast.replace(projection=tuple(p.var if isinstance(p, Count) else p for p in ast.projection),
                          order_keys=())
    elif ast.aggregates and rng.random() < 0.5:
        ast = ast.replace(projection=tuple(Count(p.var, p.alias, False) if isinstance(p, Count) else p
                                           for p in ast.projection))
    if ast.form == SELECT:
        if rng.random() < 0.4:
            ast = ast.replace(distinct=not ast.distinct)
        if rng.random() < 0.5:
            ast = ast.replace(limit=rng.choice([None, 1, 3, 5, 10]))
        if rng.random() < 0.4 and variables and not ast.aggregates:
            v = rng.choice(variables)
            keys = list(ast.order_keys)
            if keys and rng.random() < 0.5:
                keys.pop()
            else:
                keys.append(OrderKey(v, descending=rng.random() < 0.5))
            ast = ast.replace(order_keys=tuple(keys))
    return check_ast(ast)


def random_case(seed: int) -> tuple[QueryAst, Category]:
    rng = random.Random(seed)
    ast = random_ast(rng)
    return ast, rng.choice(list(Category))


__all__ = ["random_ast", "random_case", "Var"]
