//! Graph serialization: node/edge lists, GraphML, and Pajek.
//!
//! All writers iterate the graph's ordered maps, so output bytes are a pure
//! function of graph content. The GraphML dialect written here is also read
//! back for round-trips; the CSV pair (nodes + edges) round-trips
//! everything except the researcher total, which node/edge lists do not
//! carry.

use std::collections::BTreeMap;
use std::io::BufRead;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer, XmlVersion};

use crate::coaffil::{check_graph, CoAffiliationGraph};
use crate::{CoreError, EntityKey, Level, Result};

fn format_err(message: impl Into<String>) -> CoreError {
    CoreError::format("graphml", message)
}

/// Node list: `id,weight`, one row per entity in key order.
pub fn nodes_to_csv(graph: &CoAffiliationGraph) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["id", "weight"])?;
    for (key, weight) in &graph.nodes {
        writer.write_record([key.as_str(), &weight.to_string()])?;
    }
    String::from_utf8(writer.into_inner().expect("vec writer cannot fail"))
        .map_err(|e| CoreError::format("nodes csv", e.to_string()))
}

/// Edge list: `source,target,weight` with canonically sorted endpoints.
pub fn edges_to_csv(graph: &CoAffiliationGraph) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["source", "target", "weight"])?;
    for ((a, b), weight) in &graph.edges {
        writer.write_record([a.as_str(), b.as_str(), &weight.to_string()])?;
    }
    String::from_utf8(writer.into_inner().expect("vec writer cannot fail"))
        .map_err(|e| CoreError::format("edges csv", e.to_string()))
}

/// Rebuilds a graph from the node and edge lists written above.
///
/// The researcher total is not part of the lists and comes back as 0.
pub fn graph_from_csv<R1: std::io::Read, R2: std::io::Read>(
    nodes: R1,
    edges: R2,
    level: Level,
) -> Result<CoAffiliationGraph> {
    let mut graph = CoAffiliationGraph {
        level,
        ..CoAffiliationGraph::default()
    };
    let mut node_reader = csv::Reader::from_reader(nodes);
    for row in node_reader.records() {
        let row = row?;
        let id = row
            .get(0)
            .ok_or_else(|| CoreError::format("nodes csv", "missing id column"))?;
        let weight: u64 = row
            .get(1)
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| CoreError::format("nodes csv", format!("bad weight for {id}")))?;
        graph.nodes.insert(EntityKey::from(id), weight);
    }
    let mut edge_reader = csv::Reader::from_reader(edges);
    for row in edge_reader.records() {
        let row = row?;
        let source = row
            .get(0)
            .ok_or_else(|| CoreError::format("edges csv", "missing source column"))?;
        let target = row
            .get(1)
            .ok_or_else(|| CoreError::format("edges csv", "missing target column"))?;
        let weight: u64 = row
            .get(2)
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| CoreError::format("edges csv", "bad weight"))?;
        let (a, b) = if source <= target {
            (source, target)
        } else {
            (target, source)
        };
        graph
            .edges
            .insert((EntityKey::from(a), EntityKey::from(b)), weight);
    }
    check_graph(&graph)?;
    Ok(graph)
}

const KEY_NODE_WEIGHT: &str = "nw";
const KEY_EDGE_WEIGHT: &str = "ew";
const KEY_LEVEL: &str = "level";
const KEY_RESEARCHERS: &str = "researchers";

/// GraphML document with node- and edge-weight attributes plus graph-level
/// aggregation metadata. Loadable by standard network tools and by
/// [`graph_from_graphml`].
pub fn graph_to_graphml(graph: &CoAffiliationGraph) -> Result<String> {
    let mut writer = Writer::new_with_indent(Vec::new(), b' ', 2);
    let write = |w: &mut Writer<Vec<u8>>, ev: Event| {
        w.write_event(ev)
            .map_err(|e| format_err(format!("write failed: {e}")))
    };

    write(&mut writer, Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))?;
    let mut root = BytesStart::new("graphml");
    root.push_attribute(("xmlns", "http://graphml.graphdrawing.org/xmlns"));
    write(&mut writer, Event::Start(root))?;

    for (id, target, ty) in [
        (KEY_NODE_WEIGHT, "node", "long"),
        (KEY_EDGE_WEIGHT, "edge", "long"),
        (KEY_LEVEL, "graph", "string"),
        (KEY_RESEARCHERS, "graph", "long"),
    ] {
        let mut key = BytesStart::new("key");
        key.push_attribute(("id", id));
        key.push_attribute(("for", target));
        let name = match id {
            KEY_NODE_WEIGHT | KEY_EDGE_WEIGHT => "weight",
            other => other,
        };
        key.push_attribute(("attr.name", name));
        key.push_attribute(("attr.type", ty));
        write(&mut writer, Event::Empty(key))?;
    }

    let mut g = BytesStart::new("graph");
    g.push_attribute(("id", "G"));
    g.push_attribute(("edgedefault", "undirected"));
    write(&mut writer, Event::Start(g))?;

    let data = |w: &mut Writer<Vec<u8>>, key: &str, value: &str| -> Result<()> {
        let mut start = BytesStart::new("data");
        start.push_attribute(("key", key));
        write(w, Event::Start(start))?;
        write(w, Event::Text(BytesText::new(value)))?;
        write(w, Event::End(BytesEnd::new("data")))
    };

    data(&mut writer, KEY_LEVEL, graph.level.as_str())?;
    data(&mut writer, KEY_RESEARCHERS, &graph.researchers.to_string())?;

    for (key, weight) in &graph.nodes {
        let mut node = BytesStart::new("node");
        node.push_attribute(("id", key.as_str()));
        write(&mut writer, Event::Start(node))?;
        data(&mut writer, KEY_NODE_WEIGHT, &weight.to_string())?;
        write(&mut writer, Event::End(BytesEnd::new("node")))?;
    }
    for ((a, b), weight) in &graph.edges {
        let mut edge = BytesStart::new("edge");
        edge.push_attribute(("source", a.as_str()));
        edge.push_attribute(("target", b.as_str()));
        write(&mut writer, Event::Start(edge))?;
        data(&mut writer, KEY_EDGE_WEIGHT, &weight.to_string())?;
        write(&mut writer, Event::End(BytesEnd::new("edge")))?;
    }

    write(&mut writer, Event::End(BytesEnd::new("graph")))?;
    write(&mut writer, Event::End(BytesEnd::new("graphml")))?;
    let mut bytes = writer.into_inner();
    bytes.push(b'\n');
    String::from_utf8(bytes).map_err(|e| format_err(e.to_string()))
}

/// Parses a GraphML document produced by [`graph_to_graphml`].
pub fn graph_from_graphml<R: BufRead>(reader: R) -> Result<CoAffiliationGraph> {
    enum Scope {
        Graph,
        Node(EntityKey),
        Edge(EntityKey, EntityKey),
    }

    let mut xml = Reader::from_reader(reader);
    let mut buf = Vec::new();
    // key id → attr.name as declared in the document
    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut graph = CoAffiliationGraph::default();
    let mut level: Option<Level> = None;
    let mut scope = Scope::Graph;
    let mut data_key: Option<String> = None;
    let mut data_value = String::new();

    let attr_of = |start: &BytesStart, name: &str| -> Result<Option<String>> {
        for attr in start.attributes() {
            let attr = attr.map_err(|e| format_err(e.to_string()))?;
            if attr.key.as_ref() == name {
                let value = attr
                    .normalized_value(XmlVersion::Implicit1_0)
                    .map_err(|e| format_err(e.to_string()))?;
                return Ok(Some(value.into_owned()));
            }
        }
        Ok(None)
    };
    let required = |start: &BytesStart, name: &str| -> Result<String> {
        attr_of(start, name)?.ok_or_else(|| {
            format_err(format!("<{}> missing attribute {name}", start.name().as_ref()))
        })
    };

    loop {
        match xml.read_event_into(&mut buf) {
            Err(e) => return Err(format_err(e.to_string())),
            Ok(Event::Eof) => break,
            Ok(Event::Start(start) | Event::Empty(start)) => {
                match start.name().as_ref() {
                    "key" => {
                        let id = required(&start, "id")?;
                        let name = required(&start, "attr.name")?;
                        key_names.insert(id, name);
                    }
                    "node" => {
                        let id = required(&start, "id")?;
                        let key = EntityKey::from(id);
                        graph.nodes.entry(key.clone()).or_insert(0);
                        scope = Scope::Node(key);
                    }
                    "edge" => {
                        let source = EntityKey::from(required(&start, "source")?);
                        let target = EntityKey::from(required(&start, "target")?);
                        let (a, b) = if source <= target {
                            (source, target)
                        } else {
                            (target, source)
                        };
                        graph.edges.entry((a.clone(), b.clone())).or_insert(0);
                        scope = Scope::Edge(a, b);
                    }
                    "data" => {
                        data_key = Some(required(&start, "key")?);
                        data_value.clear();
                    }
                    _ => {}
                }
            }
            Ok(Event::Text(text)) => {
                if data_key.is_some() {
                    data_value.push_str(text.as_ref());
                }
            }
            // entity and character references arrive as separate events
            Ok(Event::GeneralRef(entity)) => {
                if data_key.is_some() {
                    let resolved = entity
                        .resolve_char_ref()
                        .map_err(|e| format_err(e.to_string()))?;
                    let ch = match resolved {
                        Some(c) => c,
                        None => match entity.as_ref() {
                            "lt" => '<',
                            "gt" => '>',
                            "amp" => '&',
                            "apos" => '\'',
                            "quot" => '"',
                            other => {
                                return Err(format_err(format!("unsupported entity &{other};")))
                            }
                        },
                    };
                    data_value.push(ch);
                }
            }
            Ok(Event::End(end)) => match end.name().as_ref() {
                "node" | "edge" => scope = Scope::Graph,
                "data" => {
                    let key_id = data_key.take().ok_or_else(|| format_err("stray </data>"))?;
                    let attr_name = key_names
                        .get(&key_id)
                        .ok_or_else(|| format_err(format!("undeclared key id {key_id}")))?;
                    let value = data_value.trim().to_string();
                    let as_count = || -> Result<u64> {
                        value
                            .parse()
                            .map_err(|_| format_err(format!("bad count value {value:?}")))
                    };
                    match (&scope, attr_name.as_str()) {
                        (Scope::Node(id), "weight") => {
                            graph.nodes.insert(id.clone(), as_count()?);
                        }
                        (Scope::Edge(a, b), "weight") => {
                            graph.edges.insert((a.clone(), b.clone()), as_count()?);
                        }
                        (Scope::Graph, KEY_LEVEL) => {
                            level = Some(Level::parse(&value).ok_or_else(|| {
                                format_err(format!("unknown level {value:?}"))
                            })?);
                        }
                        (Scope::Graph, KEY_RESEARCHERS) => {
                            graph.researchers = as_count()?;
                        }
                        _ => {}
                    }
                }
                _ => {}
            },
            Ok(_) => {}
        }
        buf.clear();
    }

    graph.level = level.ok_or_else(|| format_err("missing graph-level aggregation data"))?;
    check_graph(&graph)?;
    Ok(graph)
}

/// Pajek `.net` document: vertices numbered in key order, then an edge
/// section with weights.
pub fn graph_to_pajek(graph: &CoAffiliationGraph) -> String {
    let index: BTreeMap<&EntityKey, usize> = graph
        .nodes
        .keys()
        .enumerate()
        .map(|(i, k)| (k, i + 1))
        .collect();
    let mut out = format!("*Vertices {}\n", graph.nodes.len());
    for (key, number) in &index {
        out.push_str(&format!("{number} \"{}\"\n", key.as_str().replace('"', "''")));
    }
    out.push_str("*Edges\n");
    for ((a, b), weight) in &graph.edges {
        out.push_str(&format!("{} {} {weight}\n", index[a], index[b]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_graph() -> CoAffiliationGraph {
        let mut graph = CoAffiliationGraph {
            level: Level::Organization,
            researchers: 7,
            ..Default::default()
        };
        for (node, weight) in [
            ("NL|R&D <LAB>", 4u64),
            ("NL|DELFT \"TECH\"", 3),
            ("US|MIT", 5),
        ] {
            graph.nodes.insert(node.into(), weight);
        }
        graph
            .edges
            .insert(("NL|DELFT \"TECH\"".into(), "NL|R&D <LAB>".into()), 2);
        graph.edges.insert(("NL|R&D <LAB>".into(), "US|MIT".into()), 1);
        graph
    }

    #[test]
    fn csv_roundtrip_preserves_nodes_and_edges() {
        let graph = sample_graph();
        let nodes = nodes_to_csv(&graph).unwrap();
        let edges = edges_to_csv(&graph).unwrap();
        let back = graph_from_csv(nodes.as_bytes(), edges.as_bytes(), graph.level).unwrap();
        assert_eq!(back.nodes, graph.nodes);
        assert_eq!(back.edges, graph.edges);
        assert_eq!(back.level, graph.level);
    }

    #[test]
    fn graphml_roundtrip_is_exact() {
        let graph = sample_graph();
        let xml = graph_to_graphml(&graph).unwrap();
        let back = graph_from_graphml(xml.as_bytes()).unwrap();
        assert_eq!(back, graph);
    }

    #[test]
    fn graphml_escapes_special_characters() {
        let xml = graph_to_graphml(&sample_graph()).unwrap();
        assert!(xml.contains("R&amp;D"));
        assert!(xml.contains("&lt;LAB&gt;"));
        assert!(!xml.contains("R&D <LAB>"));
    }

    #[test]
    fn graphml_empty_graph_roundtrip() {
        let graph = CoAffiliationGraph {
            level: Level::City,
            ..Default::default()
        };
        let xml = graph_to_graphml(&graph).unwrap();
        let back = graph_from_graphml(xml.as_bytes()).unwrap();
        assert_eq!(back, graph);
    }

    #[test]
    fn graphml_rejects_edge_to_missing_node() {
        let doc = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="nw" for="node" attr.name="weight" attr.type="long"/>
  <key id="ew" for="edge" attr.name="weight" attr.type="long"/>
  <key id="level" for="graph" attr.name="level" attr.type="string"/>
  <graph id="G" edgedefault="undirected">
    <data key="level">country</data>
    <node id="A"><data key="nw">1</data></node>
    <edge source="A" target="GHOST"><data key="ew">1</data></edge>
  </graph>
</graphml>
"#;
        // the reader materializes GHOST as a zero-weight node, which the
        // shared validator then rejects
        assert!(graph_from_graphml(doc.as_bytes()).is_err());
    }

    #[test]
    fn graphml_requires_level_metadata() {
        let doc = r#"<?xml version="1.0"?>
<graphml><graph id="G" edgedefault="undirected"></graph></graphml>"#;
        let err = graph_from_graphml(doc.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("aggregation"));
    }

    #[test]
    fn pajek_layout() {
        let graph = sample_graph();
        let net = graph_to_pajek(&graph);
        let expected = "*Vertices 3\n\
                        1 \"NL|DELFT ''TECH''\"\n\
                        2 \"NL|R&D <LAB>\"\n\
                        3 \"US|MIT\"\n\
                        *Edges\n\
                        1 2 2\n\
                        2 3 1\n";
        assert_eq!(net, expected);
    }
}
