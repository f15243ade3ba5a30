//! Entity types and the per-type bidirectional name/id maps.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Suffix used for context aliases created by the builders (`word` -> `word-ctx`).
pub const CONTEXT_SUFFIX: &str = "-ctx";

/// Index of an entity type inside a [`Registry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(pub usize);

/// Dense id of an entity within its own type.
pub type EntityId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeRole {
    Target,
    /// Column-side alias of a target type. Trained as a distinct type but
    /// resolves to the semantic type it aliases.
    Context {
        alias_of: TypeId,
    },
}

#[derive(Debug, Clone)]
pub struct EntityType {
    pub name: String,
    pub role: TypeRole,
    names: Vec<String>,
    ids: HashMap<String, EntityId>,
}

impl EntityType {
    fn new(name: String, role: TypeRole) -> Self {
        Self { name, role, names: Vec::new(), ids: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn is_context(&self) -> bool {
        matches!(self.role, TypeRole::Context { .. })
    }

    pub fn name_of(&self, id: EntityId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<EntityId> {
        self.ids.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// All entity types of a database and the entities registered under each.
///
/// Ids are contiguous from 0 within each type and never reused.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    types: Vec<EntityType>,
    by_name: HashMap<String, TypeId>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_type(&mut self, name: &str) -> Result<TypeId> {
        self.insert_type(name, TypeRole::Target)
    }

    /// Registers `name` as a context alias of the existing target type `alias_of`.
    pub fn add_context_type(&mut self, name: &str, alias_of: &str) -> Result<TypeId> {
        let target = self.type_id(alias_of)?;
        if self.types[target.0].is_context() {
            return Err(Error::InvalidArgument(format!("`{alias_of}` is itself a context type and cannot be aliased")));
        }
        self.insert_type(name, TypeRole::Context { alias_of: target })
    }

    fn insert_type(&mut self, name: &str, role: TypeRole) -> Result<TypeId> {
        if name.is_empty() || name.contains(char::is_whitespace) || name.contains(':') {
            return Err(Error::InvalidArgument(format!("invalid type name `{name}`")));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateType(name.to_string()));
        }
        let id = TypeId(self.types.len());
        self.types.push(EntityType::new(name.to_string(), role));
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Returns the id of target type `name`, registering it if absent.
    pub fn ensure_type(&mut self, name: &str) -> Result<TypeId> {
        match self.by_name.get(name) {
            Some(&id) => Ok(id),
            None => self.add_type(name),
        }
    }

    /// Returns the context alias of `target`, registering `<target>-ctx` if absent.
    pub fn ensure_context_of(&mut self, target: TypeId) -> Result<TypeId> {
        let name = format!("{}{}", self.types[target.0].name, CONTEXT_SUFFIX);
        match self.by_name.get(&name) {
            Some(&id) => match self.types[id.0].role {
                TypeRole::Context { alias_of } if alias_of == target => Ok(id),
                _ => Err(Error::InvalidArgument(format!(
                    "`{name}` exists but is not a context alias of `{}`",
                    self.types[target.0].name
                ))),
            },
            None => {
                let target_name = self.types[target.0].name.clone();
                self.add_context_type(&name, &target_name)
            }
        }
    }

    /// Resolves a type name the way the matrix file loader does: names ending in
    /// `-ctx` become context aliases of their prefix, which is created if needed.
    pub fn ensure_type_by_convention(&mut self, name: &str) -> Result<TypeId> {
        if let Some(&id) = self.by_name.get(name) {
            return Ok(id);
        }
        match name.strip_suffix(CONTEXT_SUFFIX) {
            Some(prefix) if !prefix.is_empty() => {
                let target = self.ensure_type(prefix)?;
                self.ensure_context_of(target)
            }
            _ => self.add_type(name),
        }
    }

    pub fn type_id(&self, name: &str) -> Result<TypeId> {
        self.by_name.get(name).copied().ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn get(&self, id: TypeId) -> &EntityType {
        &self.types[id.0]
    }

    pub fn types(&self) -> impl Iterator<Item = (TypeId, &EntityType)> {
        self.types.iter().enumerate().map(|(i, t)| (TypeId(i), t))
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn n_entities(&self) -> usize {
        self.types.iter().map(EntityType::len).sum()
    }

    /// Semantic type of `id`: itself for target types, the aliased type for contexts.
    pub fn semantic_type(&self, id: TypeId) -> TypeId {
        match self.types[id.0].role {
            TypeRole::Target => id,
            TypeRole::Context { alias_of } => alias_of,
        }
    }

    /// Returns the existing id of `(type_name, entity_name)` or allocates the next one.
    pub fn register_entity(&mut self, type_name: &str, entity_name: &str) -> Result<EntityId> {
        let t = self.type_id(type_name)?;
        self.register(t, entity_name)
    }

    pub fn register(&mut self, t: TypeId, entity_name: &str) -> Result<EntityId> {
        if entity_name.is_empty() || entity_name.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidArgument(format!("invalid entity name {entity_name:?}")));
        }
        let ty = &mut self.types[t.0];
        if let Some(&id) = ty.ids.get(entity_name) {
            return Ok(id);
        }
        let id = ty.names.len();
        ty.names.push(entity_name.to_string());
        ty.ids.insert(entity_name.to_string(), id);
        Ok(id)
    }

    pub fn lookup(&self, type_name: &str, entity_name: &str) -> Result<(TypeId, EntityId)> {
        let t = self.type_id(type_name)?;
        let id = self.types[t.0]
            .id_of(entity_name)
            .ok_or_else(|| Error::UnknownEntity { type_name: type_name.to_string(), name: entity_name.to_string() })?;
        Ok((t, id))
    }

    /// Parses a `type:name` key.
    pub fn lookup_key(&self, key: &str) -> Result<(TypeId, EntityId)> {
        let (t, name) =
            key.split_once(':').ok_or_else(|| Error::InvalidArgument(format!("expected `type:name`, got `{key}`")))?;
        self.lookup(t, name)
    }

    pub fn key(&self, t: TypeId, id: EntityId) -> EntityKey<'_> {
        EntityKey { ty: &self.types[t.0], id }
    }
}

/// `type:name` display form of an entity.
pub struct EntityKey<'a> {
    ty: &'a EntityType,
    id: EntityId,
}

impl fmt::Display for EntityKey<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ty.name, self.ty.name_of(self.id).unwrap_or("?"))
    }
}
