// Boot: connect the thin client, wire gestures, keep panels fresh.

import { DocClient } from './client.js';
import {
	Explanation,
	renderEditor,
	renderExplain,
	renderHistory,
	renderMessages,
	renderPopup,
	renderPresence,
	renderWiki
} from './render.js';
import { ViewModel, emptyView, parseHistory } from './viewmodel.js';

const params = new URLSearchParams(location.search);
const docId = params.get('doc') ?? 'demo';
const actor = params.get('actor') ?? `user-${Math.random().toString(36).slice(2, 7)}`;

let view: ViewModel = emptyView(docId);
const folded = new Set<string>();
let selectedAnchor: string | null = null;
let mechanismArmed: string | null = null;
let historyBlock: string | null = null;
let historyVersion: number | null = null;

const $ = (id: string) => document.getElementById(id)!;

async function createDoc(): Promise<void> {
	await fetch('/docs', {
		method: 'POST',
		headers: { 'content-type': 'application/json' },
		body: JSON.stringify({ docId })
	});
}

async function refresh(): Promise<void> {
	const res = await fetch(`/docs/${encodeURIComponent(docId)}/view`);
	if (!res.ok) return;
	view = (await res.json()) as ViewModel;
	$('editor').innerHTML = renderEditor(view);
	$('wiki').innerHTML = renderWiki(view.wiki, folded);
	$('messages').innerHTML = renderMessages(view.messages);
	$('presence').innerHTML = renderPresence(client.presences);
	if (historyBlock) void showHistory(historyBlock);
}

async function showHistory(blockId: string): Promise<void> {
	historyBlock = blockId;
	const res = await fetch(
		`/docs/${encodeURIComponent(docId)}/history/${encodeURIComponent(blockId)}`
	);
	$('history').innerHTML = renderHistory(parseHistory(await res.text()), historyVersion);
}

async function showExplain(blockId: string): Promise<void> {
	const result = await client.gesture({ gesture: 'explain', blockId });
	if (!result.ok) return;
	const exp = result.result as unknown as Explanation;
	const prompt = view.blocks.find((b) => b.id === blockId)?.content ?? '';
	const code =
		view.blocks.find((b) => b.kind === 'code' && b.sourcePromptId === blockId)?.content ?? '';
	$('explain').innerHTML = renderExplain(exp, prompt, code);
}

const scheme = location.protocol === 'https:' ? 'wss' : 'ws';
const ws = new WebSocket(`${scheme}://${location.host}/ws`);
const client = new DocClient(
	{ send: (d) => ws.send(d), close: () => ws.close() },
	docId,
	actor
);
let refreshTimer: number | undefined;
client.onRefresh = () => {
	clearTimeout(refreshTimer);
	refreshTimer = setTimeout(() => void refresh(), 40) as unknown as number;
};
client.onPopup = (p) => {
	const host = $('popups');
	host.insertAdjacentHTML('beforeend', renderPopup(p));
};

ws.addEventListener('open', async () => {
	await createDoc();
	client.hello();
	await refresh();
});
ws.addEventListener('message', (ev) => client.onMessage(String(ev.data)));
window.addEventListener('beforeunload', () => client.teardown());

// -- gesture wiring ---------------------------------------------------------

$('add-heading').addEventListener('click', () => {
	const content = prompt('heading text?') ?? '';
	if (content) void client.gesture({ gesture: 'addBlock', kind: 'heading', content, level: 1 });
});
$('add-prompt').addEventListener('click', () => {
	const content = prompt('prompt text?') ?? '';
	if (content) void client.gesture({ gesture: 'addBlock', kind: 'prompt', content });
});
$('add-code').addEventListener('click', () => {
	const content = prompt('code?') ?? '';
	if (content) void client.gesture({ gesture: 'addBlock', kind: 'code', content });
});

for (const kind of ['refer', 'request', 'share', 'link']) {
	$(`arm-${kind}`).addEventListener('click', () => {
		mechanismArmed = kind;
		$('status').textContent = selectedAnchor
			? `${kind}: now pick a target node in the wiki`
			: `${kind}: select a source node in the editor first`;
	});
}

function blockOf(el: Element): string | null {
	return el.closest<HTMLElement>('[data-block]')?.dataset.block ?? null;
}

$('editor').addEventListener('mouseup', () => {
	// selection → anchor gesture
	const sel = window.getSelection();
	if (!sel || sel.isCollapsed || !sel.anchorNode) return;
	const blockEl = (sel.anchorNode.parentElement ?? undefined)?.closest<HTMLElement>(
		'[data-block]'
	);
	if (!blockEl) return;
	const blockId = blockEl.dataset.block!;
	const textEl = blockEl.querySelector('.block-text');
	if (!textEl) return;
	const range = sel.getRangeAt(0);
	const pre = range.cloneRange();
	pre.selectNodeContents(textEl);
	pre.setEnd(range.startContainer, range.startOffset);
	const start = pre.toString().length;
	const end = start + range.toString().length;
	void client
		.gesture({ gesture: 'selectNode', blockId, start, end })
		.then((res) => {
			if (res.ok && res.result) {
				selectedAnchor = String(res.result.anchorId);
				$('status').textContent = `source node set (${selectedAnchor})`;
			}
		});
});

$('editor').addEventListener('click', (ev) => {
	const target = ev.target as HTMLElement;
	const blockId = blockOf(target);
	if (!blockId) return;
	const act = target.dataset.act;
	if (act === 'generate') void client.gesture({ gesture: 'generate', blockId });
	else if (act === 'run') void client.gesture({ gesture: 'runCode', blockId });
	else if (act === 'promptFromCode') void client.gesture({ gesture: 'promptFromCode', blockId });
	else if (act === 'explain') void showExplain(blockId);
	else if (act === 'history') {
		historyVersion = null;
		void showHistory(blockId);
	}
});

$('editor').addEventListener('dblclick', (ev) => {
	const target = ev.target as HTMLElement;
	const blockId = blockOf(target);
	if (!blockId) return;
	const block = view.blocks.find((b) => b.id === blockId);
	if (!block) return;
	const edited = prompt('edit block text', block.content);
	if (edited !== null && edited !== block.content) {
		void client.gesture({
			gesture: 'type',
			blockId,
			rangeEdits: [[0, block.content.length, edited]]
		});
	}
});

$('wiki').addEventListener('click', (ev) => {
	const target = ev.target as HTMLElement;
	const fold = target.dataset.task;
	if (fold) {
		if (folded.has(fold)) folded.delete(fold);
		else folded.add(fold);
		$('wiki').innerHTML = renderWiki(view.wiki, folded);
		return;
	}
	const nav = target.closest<HTMLElement>('[data-navigate]')?.dataset.navigate;
	if (!nav) return;
	if (mechanismArmed && selectedAnchor) {
		// target node: whole prompt (or whole section for headings)
		const blk = view.blocks.find((b) => b.id === nav);
		const end = blk && blk.kind !== 'heading' ? blk.content.length : 0;
		const message = prompt('message for this action (optional)?') ?? undefined;
		const kind = mechanismArmed;
		mechanismArmed = null;
		void client
			.gesture({ gesture: 'selectNode', blockId: nav, start: 0, end })
			.then((res) => {
				if (res.ok && res.result) {
					void client.gesture({
						gesture: 'mechanismIcon',
						kind,
						source: selectedAnchor,
						target: String(res.result.anchorId),
						message
					});
				}
			});
		$('status').textContent = `${kind} created`;
	} else {
		document
			.querySelector(`[data-block="${nav}"]`)
			?.scrollIntoView({ behavior: 'smooth', block: 'center' });
	}
});

$('messages').addEventListener('click', (ev) => {
	const target = ev.target as HTMLElement;
	if (target.dataset.resolve !== undefined) {
		const id = target.closest<HTMLElement>('[data-message]')?.dataset.message;
		if (id) void client.gesture({ gesture: 'resolveMessage', messageId: id });
		return;
	}
	const nav = target.closest<HTMLElement>('[data-navigate]')?.dataset.navigate;
	if (nav)
		document
			.querySelector(`[data-block="${nav}"]`)
			?.scrollIntoView({ behavior: 'smooth', block: 'center' });
});

$('history').addEventListener('click', (ev) => {
	const target = ev.target as HTMLElement;
	if (target.dataset.rollback && historyBlock) {
		void client.gesture({
			gesture: 'rollback',
			blockId: historyBlock,
			toVersion: Number(target.dataset.rollback)
		});
		return;
	}
	const version = target.closest<HTMLElement>('[data-version]')?.dataset.version;
	if (version && historyBlock) {
		historyVersion = Number(version);
		void showHistory(historyBlock);
	}
});

$('popups').addEventListener('click', (ev) => {
	const target = ev.target as HTMLElement;
	const popup = target.closest<HTMLElement>('[data-link]');
	if (!popup) return;
	const linkId = popup.dataset.link!;
	if (target.dataset.accept !== undefined) {
		void client.gesture({ gesture: 'popupAccept', linkId });
		popup.remove();
	} else if (target.dataset.decline !== undefined) {
		void client.gesture({ gesture: 'popupDecline', linkId });
		popup.remove();
	}
});

document.addEventListener('selectionchange', () => {
	const sel = window.getSelection();
	if (!sel || !sel.anchorNode) return;
	const blockEl = (sel.anchorNode.parentElement ?? undefined)?.closest<HTMLElement>(
		'[data-block]'
	);
	if (blockEl) client.sendPresence([blockEl.dataset.block!, sel.anchorOffset], null);
});
